"""Thermal Kohn-Sham self-consistency with the local Hxc functional.

The Hxc potential for the Hubbard chain is

    v_hxc(n) = U + (1/beta) * ln Gamma(n),
    Gamma(n) = [(n-1) + sqrt((n-1)^2 + exp(-beta*U)*(1-(n-1)^2))] / n,

valid for site densities n in (0, 2). The kernel f_hxc = dv_hxc/dn is the
analytic derivative of the same expression.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.optimize
from scipy.optimize import brentq

from .errors import CapacityError, ConvergenceError, InputError, NumericalError
from .lattice import build_single_particle_hamiltonian

DENSITY_CLAMP = 1e-12
CANONICAL_L_GUARD = 12


@dataclass(frozen=True)
class EnsembleSpec:
    """Thermal ensemble: grand-canonical at mean N, or canonical (Nup, Ndown)."""

    kind: str
    beta: float
    target_n: float = None
    nup: int = None
    ndown: int = None

    def __post_init__(self):
        if self.kind not in ("grand-canonical", "canonical"):
            raise InputError(f"unknown ensemble kind {self.kind!r}")
        if self.beta <= 0:
            raise InputError(f"beta must be positive, got {self.beta}")
        if self.kind == "grand-canonical":
            if self.target_n is None or self.target_n <= 0:
                raise InputError("grand-canonical ensemble needs target_n > 0")
        else:
            if self.nup is None or self.ndown is None:
                raise InputError("canonical ensemble needs (nup, ndown)")

    def particle_count(self):
        if self.kind == "grand-canonical":
            return self.target_n
        return self.nup + self.ndown


@dataclass(frozen=True)
class HxcEvaluation:
    v_hxc: float
    gamma: float
    f_hxc: float


@dataclass(frozen=True)
class ThermalKsState:
    """Converged KS solution: orbitals are columns of `orbitals`."""

    spec: object
    ensemble: EnsembleSpec
    v_ext: np.ndarray
    v_ks: np.ndarray
    orbitals: np.ndarray
    energies: np.ndarray
    occupations: np.ndarray
    densities: np.ndarray
    mu: float
    iterations: int
    residual: float
    clamp_events: int = 0
    trace: list = field(default=None, repr=False)


def _clamp_density(n):
    lo, hi = DENSITY_CLAMP, 2.0 - DENSITY_CLAMP
    clipped = np.clip(n, lo, hi)
    return clipped, int(np.sum((n < lo) | (n > hi)))


def hxc_potential(n, U, beta):
    """Evaluate v_hxc, Gamma, and the kernel f_hxc at density n.

    Accepts scalars or arrays; densities are clamped to
    [1e-12, 2 - 1e-12] before evaluation.
    """
    n_arr = np.asarray(n, dtype=float)
    if np.any(n_arr < 0) or np.any(n_arr > 2):
        raise InputError("density outside [0, 2]")
    if U < 0:
        raise InputError("U must be nonnegative")
    if beta <= 0:
        raise InputError("beta must be positive")
    n_arr, _ = _clamp_density(n_arr)

    x = n_arr - 1.0
    e = np.exp(-beta * U)
    s = np.sqrt(x * x + e * (1.0 - x * x))
    # x + s cancels catastrophically for x < 0 at large beta*U; the
    # rationalized form e(1-x^2)/(s-x) is exact and stable there.
    plus = np.where(x < 0, e * (1.0 - x * x) / (s - x), x + s)
    gamma = plus / n_arr
    v = U + np.log(gamma) / beta
    # d/dn of Gamma, with ds/dn = x (1 - e) / s; written in terms of the
    # stable (x + s) to avoid the same cancellation as above.
    dgamma = (plus - e * x) / (s * n_arr) - plus / (n_arr * n_arr)
    f = dgamma / (beta * gamma)
    if np.isscalar(n) or np.ndim(n) == 0:
        return HxcEvaluation(float(v), float(gamma), float(f))
    return HxcEvaluation(v, gamma, f)


def fermi_occupations(energies, mu, beta):
    """Per-spin Fermi factors, overflow-safe."""
    x = beta * (np.asarray(energies, dtype=float) - mu)
    out = np.empty_like(x)
    pos = x > 0
    out[pos] = np.exp(-x[pos]) / (1.0 + np.exp(-x[pos]))
    out[~pos] = 1.0 / (1.0 + np.exp(x[~pos]))
    return out


def find_mu(energies, beta, target_n, tol=1e-12):
    """Chemical potential with 2 * sum_a f_a(mu) = target_n (spin factor 2).

    The particle count is monotone in mu, so an auto-expanded bracket plus
    Brent's method is sufficient.
    """
    e = np.asarray(energies, dtype=float)
    if not 0 < target_n < 2 * e.size:
        raise InputError(f"target_n must lie in (0, {2 * e.size})")

    def count(mu):
        return 2.0 * fermi_occupations(e, mu, beta).sum() - target_n

    lo = e.min() - 50.0 / beta
    hi = e.max() + 50.0 / beta
    for _ in range(60):
        if count(lo) < 0 < count(hi):
            break
        lo -= 50.0 / beta
        hi += 50.0 / beta
    else:
        raise NumericalError("failed to bracket the chemical potential")
    return brentq(count, lo, hi, xtol=tol, rtol=8.9e-16)


def grand_canonical_densities(orbitals, energies, mu, beta):
    f = fermi_occupations(energies, mu, beta)
    dens = 2.0 * (orbitals**2) @ f
    return dens, f


def _spin_channel_enumeration(orbitals, energies, count, beta):
    """Canonical one-spin channel: Boltzmann sum over C(L, count) configs.

    Returns (site densities, mean orbital occupations) for that channel.
    """
    L = energies.size
    configs = list(combinations(range(L), count))
    e_cfg = np.array([energies[list(c)].sum() for c in configs])
    w = np.exp(-beta * (e_cfg - e_cfg.min()))
    w /= w.sum()
    occ = np.zeros(L)
    for weight, cfg in zip(w, configs):
        for a in cfg:
            occ[a] += weight
    dens = (orbitals**2) @ occ
    return dens, occ


def canonical_densities(orbitals, energies, nup, ndown, beta):
    """Site densities of noninteracting fermions at fixed (Nup, Ndown).

    Spin channels are independent for a quadratic Hamiltonian, so each is
    enumerated separately. Guarded at L <= 12.
    """
    L = energies.size
    if L > CANONICAL_L_GUARD:
        raise CapacityError(f"canonical enumeration guarded at L <= {CANONICAL_L_GUARD}")
    d_up, occ_up = _spin_channel_enumeration(orbitals, energies, nup, beta)
    d_dn, occ_dn = _spin_channel_enumeration(orbitals, energies, ndown, beta)
    return d_up + d_dn, 0.5 * (occ_up + occ_dn)


def thermal_occupations(energies, orbitals, mu, ensemble):
    """Densities n_i and per-spin occupations f_a for a given KS spectrum."""
    if ensemble.kind == "grand-canonical":
        return grand_canonical_densities(orbitals, energies, mu, ensemble.beta)
    return canonical_densities(
        orbitals, energies, ensemble.nup, ensemble.ndown, ensemble.beta
    )


def scf_solve(
    spec,
    ensemble,
    v_ext,
    mixing=0.3,
    tol=1e-10,
    max_iter=5000,
    keep_trace=False,
):
    """Fixed point of n -> densities(H_KS[v_ext + v_hxc(n)]).

    Plain linear mixing; the mixing factor is halved (down to 0.01) if the
    residual stalls, which stabilizes the strongly interacting regime. The
    chemical potential is re-solved at every iteration (grand-canonical).
    If mixing keeps oscillating (the strongly coupled charge-ordered
    regime, where the fixed point becomes repulsive for plain iteration),
    the remaining work is handed to a quasi-Newton root solve of
    n - densities(n) = 0.
    """
    v_ext = np.asarray(v_ext, dtype=float)
    if v_ext.shape != (spec.L,):
        raise InputError(f"v_ext must have length {spec.L}")
    beta = ensemble.beta
    n_total = ensemble.particle_count()
    if not 0 < n_total < 2 * spec.L:
        raise InputError("particle count outside (0, 2L)")

    clamp_count = [0]

    def step(n_in):
        n_in, clamped = _clamp_density(np.asarray(n_in, dtype=float))
        clamp_count[0] += clamped
        v_ks = v_ext + hxc_potential(n_in, spec.U, beta).v_hxc
        h = build_single_particle_hamiltonian(spec, v_ks)
        energies, orbitals = np.linalg.eigh(h)
        if ensemble.kind == "grand-canonical":
            mu = find_mu(energies, beta, n_total)
        else:
            # Canonical: mu is reported metadata only (midgap estimate).
            k = max(ensemble.nup, ensemble.ndown)
            if 0 < k < spec.L:
                mu = 0.5 * float(energies[k - 1] + energies[k])
            else:
                mu = float(energies[min(k, spec.L) - 1])
        n_new, f = thermal_occupations(energies, orbitals, mu, ensemble)
        return n_new, (v_ks, energies, orbitals, mu, f)

    n = np.full(spec.L, n_total / spec.L)
    trace = [] if keep_trace else None
    # U = 0 makes the map constant in n; full steps converge immediately.
    alpha = 1.0 if spec.U == 0 else mixing
    prev_residual = np.inf
    stall = 0

    for it in range(1, max_iter + 1):
        n_new, aux = step(n)
        n, _ = _clamp_density(n)
        residual = float(np.max(np.abs(n_new - n)))
        if keep_trace:
            trace.append((it, residual, aux[3]))
        if residual < tol:
            n = n_new
            break
        if residual > prev_residual:
            stall += 1
            if stall >= 5 and alpha > 0.01:
                alpha = max(alpha / 2.0, 0.01)
                stall = 0
        else:
            stall = 0
        prev_residual = residual
        n = (1.0 - alpha) * n + alpha * n_new
    else:
        # Mixing oscillates between charge-ordered branches; finish with a
        # quasi-Newton solve of the same fixed-point map.
        sol = scipy.optimize.root(
            lambda m: step(m)[0] - m, n, method="hybr", tol=1e-13
        )
        n, _ = _clamp_density(sol.x)
        n_new, aux = step(n)
        residual = float(np.max(np.abs(n_new - n)))
        it = max_iter + int(sol.nfev)
        if residual >= tol:
            raise ConvergenceError(
                f"SCF did not converge in {max_iter} mixing iterations "
                f"plus quasi-Newton fallback (last residual {residual:.3e})",
                residual=residual,
                iterations=it,
            )
        n = n_new

    v_ks, energies, orbitals, mu, f = aux
    clamp_events = clamp_count[0]

    n, clamped = _clamp_density(n)
    clamp_events += clamped
    return ThermalKsState(
        spec=spec,
        ensemble=ensemble,
        v_ext=v_ext,
        v_ks=v_ks,
        orbitals=orbitals,
        energies=energies,
        occupations=f,
        densities=n,
        mu=mu,
        iterations=it,
        residual=residual,
        clamp_events=clamp_events,
        trace=trace,
    )
