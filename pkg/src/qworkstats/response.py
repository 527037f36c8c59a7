"""Finite-temperature density-density response in pole form.

Internally every response function is carried as a transition space: a set
of excitation frequencies omega_q > 0 and real amplitude vectors u_q with

    chi_ij(z) = sum_q u_q(i) u_q(j) / (z^2 - omega_q^2),

equivalent to the textbook pole convention with residue matrices
R_q = u_q u_q^T / (2 omega_q). Dressing with a frequency-independent
kernel is then a symmetric eigenproblem in transition space:

    M = diag(omega_q^2) + A K A^T,   A = stacked amplitudes,

whose eigenvalues are the squared dressed frequencies and whose
eigenvectors rotate the amplitudes. With K = 0 the rotation is the
identity, so the Kohn-Sham input is returned unchanged, and the dressed
response satisfies the Dyson relation chi = chi_KS + chi_KS K chi at
every frequency (checked against the direct grid solve in the tests).
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import StabilityError
from .thermal_ks import fermi_occupations, hxc_potential

DF_FLOOR = 1e-14
OMEGA_FLOOR = 1e-10
OMEGA_MERGE = 1e-9
ETA_DEFAULT = 1e-3
DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class TransitionSpace:
    """Rank-one pole decomposition of a response function."""

    omegas: np.ndarray  # (Q,) ascending, all > 0
    amps: np.ndarray  # (Q, L)

    def __post_init__(self):
        object.__setattr__(self, "omegas", np.asarray(self.omegas, dtype=float))
        object.__setattr__(self, "amps", np.asarray(self.amps, dtype=float))

    @property
    def size(self):
        return self.omegas.size

    def evaluate(self, z):
        """chi matrix at complex frequency z (broadening via Im z)."""
        denom = z * z - self.omegas**2
        return np.einsum("q,qi,qj->ij", 1.0 / denom, self.amps, self.amps)

    def static(self):
        """chi(0) = -sum_q u_q u_q^T / omega_q^2, the zero-frequency limit
        of the pole sum (transition part only)."""
        return -np.einsum("q,qi,qj->ij", 1.0 / self.omegas**2, self.amps, self.amps)

    def pattern_weights(self, pattern):
        """r_q = g^T R_q g, the drive-projected residue weights."""
        proj = self.amps @ np.asarray(pattern, dtype=float)
        return proj**2 / (2.0 * self.omegas)


@dataclass(frozen=True)
class ResponsePoles:
    """Merged pole representation {(omega_k, residue matrix R_k)}."""

    omegas: np.ndarray  # (K,) strictly ascending
    residues: np.ndarray  # (K, L, L) symmetric

    def evaluate(self, z):
        out = np.zeros(self.residues.shape[1:], dtype=complex)
        for w, r in zip(self.omegas, self.residues):
            out += r * (1.0 / (z - w) - 1.0 / (z + w))
        return out

    def static(self):
        return -2.0 * np.einsum("k,kij->ij", 1.0 / self.omegas, self.residues)


def merge_poles(space, merge_tol=OMEGA_MERGE):
    """Fold a transition space into merged ResponsePoles (residue addition
    for frequencies closer than merge_tol)."""
    order = np.argsort(space.omegas)
    omegas, residues = [], []
    for q in order:
        w = space.omegas[q]
        r = np.outer(space.amps[q], space.amps[q]) / (2.0 * w)
        if omegas and abs(w - omegas[-1]) <= merge_tol:
            residues[-1] = residues[-1] + r
        else:
            omegas.append(w)
            residues.append(r)
    return ResponsePoles(np.array(omegas), np.array(residues))


def compress_transitions(space, merge_tol=OMEGA_MERGE, weight_floor=DF_FLOOR):
    """Compress degenerate-frequency pole groups to minimal rank.

    Poles sharing a frequency (within merge_tol) contribute the summed
    residue A_S^T A_S, whose rank is at most the number of sites; the
    group is replaced by the eigenvectors of that Gram matrix scaled by
    sqrt(eigenvalue). The response function is preserved exactly while
    the pole count drops from O(many-body pairs) to O(L) per frequency.
    """
    if space.size == 0:
        return space
    order = np.argsort(space.omegas)
    omegas = space.omegas[order]
    amps = space.amps[order]
    breaks = np.flatnonzero(np.diff(omegas) > merge_tol) + 1
    out_omegas, out_amps = [], []
    for group in np.split(np.arange(omegas.size), breaks):
        a = amps[group]
        if len(group) == 1:
            out_omegas.append(omegas[group[0]])
            out_amps.append(a[0])
            continue
        gram = a.T @ a
        evals, vecs = np.linalg.eigh(gram)
        keep = evals > weight_floor * max(1.0, float(evals.max()))
        w = float(omegas[group].mean())
        for lam, vec in zip(evals[keep], vecs.T[keep]):
            out_omegas.append(w)
            out_amps.append(np.sqrt(lam) * vec)
    return TransitionSpace(np.array(out_omegas), np.array(out_amps))


def ks_transitions(state, df_floor=DF_FLOOR, omega_floor=OMEGA_FLOOR):
    """Kohn-Sham (Lindhard) transition space from Fermi occupations.

    One retained transition per orbital pair a < b with occupation
    difference above df_floor and frequency above omega_floor; the
    amplitude u_q = sqrt(4 * df_q * omega_q) * phi_a phi_b carries the
    spin factor 2. Exact for the grand-canonical noninteracting system.
    """
    e = state.energies
    f = fermi_occupations(e, state.mu, state.ensemble.beta)
    L = e.size
    omegas, amps = [], []
    for a in range(L):
        for b in range(a + 1, L):
            w = e[b] - e[a]
            df = f[a] - f[b]
            if w <= omega_floor or df <= df_floor:
                continue
            rho = state.orbitals[:, a] * state.orbitals[:, b]
            omegas.append(w)
            amps.append(np.sqrt(4.0 * df * w) * rho)
    if not omegas:
        return TransitionSpace(np.empty(0), np.empty((0, L)))
    return TransitionSpace(np.array(omegas), np.array(amps))


def thalda_kernel(state):
    """Diagonal thALDA kernel matrix K_ii = f_hxc(n_i)."""
    f = hxc_potential(state.densities, state.spec.U, state.ensemble.beta).f_hxc
    return np.diag(np.atleast_1d(f))


def dress_transitions(space, kernel, omega_floor=OMEGA_FLOOR):
    """Dress a KS transition space with a static kernel.

    Solves the transition-space eigenproblem described in the module
    docstring; the pole count is preserved. A negative eigenvalue means
    the kernel destabilizes the response and raises StabilityError.
    """
    if space.size == 0:
        return space
    coupling = space.amps @ kernel @ space.amps.T
    m = np.diag(space.omegas**2) + coupling
    evals, z = np.linalg.eigh(m)
    if evals[0] < -1e-10 * max(1.0, float(np.abs(evals).max())):
        raise StabilityError(
            f"negative squared excitation eigenvalue {evals[0]:.3e}"
        )
    evals = np.maximum(evals, omega_floor**2)
    return TransitionSpace(np.sqrt(evals), z.T @ space.amps)


def grid_dyson_solve(space, kernel, omegas, eta=ETA_DEFAULT):
    """Direct Dyson solve chi = (1 - chi_KS K)^-1 chi_KS on a frequency grid.

    Returns a list of chi matrices at omega + i*eta; samples where the
    linear system is singular are skipped with a warning and returned as
    None.
    """
    if eta <= 0:
        raise ValueError("broadening eta must be positive")
    L = space.amps.shape[1]
    eye = np.eye(L)
    out = []
    for w in omegas:
        chi_ks = space.evaluate(w + 1j * eta)
        try:
            chi = np.linalg.solve(eye - chi_ks @ kernel, chi_ks)
        except np.linalg.LinAlgError:
            warnings.warn(f"singular Dyson system at omega={w}; sample skipped")
            chi = None
        out.append(chi)
    return out


def static_response(poles):
    """chi(0) from merged poles or a transition space."""
    return poles.static()


def _occupation_derivative_matrix(energies, f, beta, deg_tol=DEGENERACY_TOL):
    """kappa_ab = (f_a - f_b)/(e_a - e_b), with the degenerate limit
    -beta f (1 - f) on and near the diagonal."""
    e = np.asarray(energies)
    de = e[:, None] - e[None, :]
    df = f[:, None] - f[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.where(np.abs(de) > deg_tol, df / np.where(de == 0, 1.0, de), 0.0)
    fprime = -beta * f * (1.0 - f)
    deg = np.abs(de) <= deg_tol
    kappa[deg] = 0.5 * (fprime[:, None] + fprime[None, :])[deg]
    return kappa


def isothermal_ks_susceptibility(state):
    """Exact isothermal dn_i/dv_j of the noninteracting KS system at fixed
    chemical potential (grand-canonical only).

    Unlike the static pole sum, this includes the intra-level
    (Fermi-surface) term -beta f(1-f), which is what enters the sudden
    dissipated work and the adiabatic weight.
    """
    if state.ensemble.kind != "grand-canonical":
        raise ValueError(
            "isothermal_ks_susceptibility requires a grand-canonical state; "
            "use the exact-diagonalization route for canonical ensembles"
        )
    beta = state.ensemble.beta
    f = fermi_occupations(state.energies, state.mu, beta)
    kappa = _occupation_derivative_matrix(state.energies, f, beta)
    # T[i, a, b] = phi_a(i) phi_b(i)
    t = state.orbitals[:, :, None] * state.orbitals[:, None, :]
    return 2.0 * np.einsum("iab,ab,jab->ij", t, kappa, t)


def fixed_particle_projection(chi):
    """Convert a fixed-mu density derivative to fixed particle number.

    A grand-canonical susceptibility describes dn under dv at constant mu.
    When the total particle number is pinned instead (as in the SCF
    solver's finite differences), mu shifts uniformly to keep e^T dn = 0,
    giving chi_N = chi - chi e e^T chi / (e^T chi e). The same projection
    commutes with kernel dressing, so it applies to dressed responses too.
    """
    e = np.ones(chi.shape[0])
    ce = chi @ e
    denom = float(e @ ce)
    if abs(denom) < 1e-300:
        return chi
    return chi - np.outer(ce, e @ chi) / denom


def dress_static(chi_iso, kernel):
    """Dress an isothermal susceptibility: chi = (1 - chi_0 K)^-1 chi_0.

    This is the chain rule for the self-consistent density derivative, so
    the result equals finite differences of converged SCF densities.
    """
    eye = np.eye(chi_iso.shape[0])
    return np.linalg.solve(eye - chi_iso @ kernel, chi_iso)
