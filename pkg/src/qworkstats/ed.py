"""Exact-diagonalization oracle for small chains.

Provides exact thermal spectra (canonical and grand-canonical), the exact
Lehmann transition space of the density-density response, the adiabatic
weight from the diagonal-matrix-element (thermal variance) formula, exact
cumulants through the shared spectrum machinery, and real-time evolution
of the driven density matrix for the relative-entropy route to the
dissipated work.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import CapacityError, InputError, NumericalError
from .lattice import (
    DENSE_CAP_DEFAULT,
    FockSector,
    build_many_body_hamiltonian,
    staggered_potential,
)
from .response import DF_FLOOR, OMEGA_FLOOR, TransitionSpace
from .workstats import RelaxationSpectrum, cumulant_report

DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class SectorSpectrum:
    sector: FockSector
    energies: np.ndarray  # ascending
    states: np.ndarray  # columns are eigenvectors
    site_numbers: np.ndarray  # (L, D) diagonal of n_i in the Fock basis


@dataclass(frozen=True)
class ManyBodySpectrum:
    """Full thermal spectral data, possibly spanning several sectors."""

    spec: object
    ensemble: object
    v_ext: np.ndarray
    sectors: tuple  # of SectorSpectrum
    probabilities: tuple  # of arrays aligned with sector energies
    log_z: float
    mu: float = 0.0

    def thermal_average(self, per_sector_diagonals):
        """<A> for an operator given by its eigenbasis diagonal per sector."""
        return sum(
            float(p @ d) for p, d in zip(self.probabilities, per_sector_diagonals)
        )

    def site_densities(self):
        dens = np.zeros(self.spec.L)
        for sec, p in zip(self.sectors, self.probabilities):
            occ = sec.states**2  # |<fock|eig>|^2
            for i in range(self.spec.L):
                dens[i] += float(p @ (sec.site_numbers[i] @ occ))
        return dens


def _sector_spectrum(spec, sector, v_ext, cap):
    ham = build_many_body_hamiltonian(sector, spec, v_ext, cap=cap)
    energies, states = np.linalg.eigh(ham)
    nd = len(sector.down_states)
    site = np.empty((spec.L, sector.dim))
    for i in range(spec.L):
        for iu, mu_mask in enumerate(sector.up_states):
            occ_up = (mu_mask >> i) & 1
            for idn, md in enumerate(sector.down_states):
                site[i, iu * nd + idn] = occ_up + ((md >> i) & 1)
    return SectorSpectrum(sector, energies, states, site)


def exact_spectrum(spec, v_ext, ensemble, cap=DENSE_CAP_DEFAULT):
    """Dense diagonalization in the requested ensemble.

    Canonical: the single (Nup, Ndown) sector. Grand-canonical: every
    sector, with the chemical potential solved so that <N> matches the
    ensemble target.
    """
    v_ext = np.asarray(v_ext, dtype=float)
    beta = ensemble.beta

    if ensemble.kind == "canonical":
        sector = FockSector(spec.L, ensemble.nup, ensemble.ndown)
        sec = _sector_spectrum(spec, sector, v_ext, cap)
        shifted = -beta * (sec.energies - sec.energies.min())
        w = np.exp(shifted)
        z = w.sum()
        log_z = float(np.log(z) - beta * sec.energies.min())
        return ManyBodySpectrum(
            spec=spec,
            ensemble=ensemble,
            v_ext=v_ext,
            sectors=(sec,),
            probabilities=(w / z,),
            log_z=log_z,
        )

    total_dim = sum(
        FockSector(spec.L, nu, nd).dim
        for nu in range(spec.L + 1)
        for nd in range(spec.L + 1)
    )
    if total_dim > cap:
        raise CapacityError(f"Fock dimension {total_dim} exceeds dense cap {cap}")
    sectors = [
        _sector_spectrum(spec, FockSector(spec.L, nu, nd), v_ext, cap)
        for nu in range(spec.L + 1)
        for nd in range(spec.L + 1)
    ]
    counts = [s.sector.nup + s.sector.ndown for s in sectors]

    def mean_n(mu):
        logw = [
            -beta * (s.energies - mu * c) for s, c in zip(sectors, counts)
        ]
        top = max(float(lw.max()) for lw in logw)
        z = sum(float(np.exp(lw - top).sum()) for lw in logw)
        n = sum(
            c * float(np.exp(lw - top).sum()) for lw, c in zip(logw, counts)
        )
        return n / z

    target = ensemble.target_n
    if not 0 < target < 2 * spec.L:
        raise InputError("grand-canonical target outside (0, 2L)")
    lo, hi = -50.0 / beta - 10 * spec.L, 50.0 / beta + 10 * spec.L
    for _ in range(60):
        if mean_n(lo) < target < mean_n(hi):
            break
        lo *= 2
        hi *= 2
    else:
        raise NumericalError("failed to bracket the grand-canonical mu")
    mu = brentq(lambda m: mean_n(m) - target, lo, hi, xtol=1e-13)

    logw = [-beta * (s.energies - mu * c) for s, c in zip(sectors, counts)]
    top = max(float(lw.max()) for lw in logw)
    z = sum(float(np.exp(lw - top).sum()) for lw in logw)
    probs = tuple(np.exp(lw - top) / z for lw in logw)
    return ManyBodySpectrum(
        spec=spec,
        ensemble=ensemble,
        v_ext=v_ext,
        sectors=tuple(sectors),
        probabilities=probs,
        log_z=float(np.log(z) + top),
        mu=float(mu),
    )


def _eigenbasis_number_elements(sec):
    """M[i] = matrix of n_i in the sector eigenbasis."""
    return np.array(
        [sec.states.T @ (sec.site_numbers[i][:, None] * sec.states) for i in range(sec.site_numbers.shape[0])]
    )


def exact_transitions(spectrum, df_floor=DF_FLOOR, omega_floor=OMEGA_FLOOR):
    """Lehmann transition space of the density-density response.

    One rank-one pole per eigenstate pair (n, m) with E_m > E_n and
    thermal weight difference above the floor; the number operators
    conserve particle number, so pairs live within a sector.
    """
    L = spectrum.spec.L
    omegas, amps = [], []
    for sec, p in zip(spectrum.sectors, spectrum.probabilities):
        m_all = _eigenbasis_number_elements(sec)  # (L, D, D)
        d = sec.energies.size
        for n in range(d):
            for m in range(n + 1, d):
                w = sec.energies[m] - sec.energies[n]
                dp = p[n] - p[m]
                if w <= omega_floor or dp <= df_floor:
                    continue
                rho = m_all[:, n, m]
                omegas.append(w)
                amps.append(np.sqrt(2.0 * dp * w) * rho)
    if not omegas:
        return TransitionSpace(np.empty(0), np.empty((0, L)))
    return TransitionSpace(np.array(omegas), np.array(amps))


def _degenerate_blocks(energies, tol=DEGENERACY_TOL):
    blocks, start = [], 0
    for k in range(1, energies.size + 1):
        if k == energies.size or energies[k] - energies[start] > tol:
            blocks.append(slice(start, k))
            start = k
    return blocks


def exact_psi_ad(spectrum, pattern, beta=None):
    """Adiabatic weight from the thermal variance of the diagonal elements
    of the drive operator V = sum_i g_i n_i.

    Degenerate eigensubspaces are handled by the block trace of (P V P)^2,
    equivalent to rotating each block so V is diagonal within it.
    """
    if beta is None:
        beta = spectrum.ensemble.beta
    g = np.asarray(pattern, dtype=float)
    mean_v = 0.0
    diag_sq = 0.0
    for sec, p in zip(spectrum.sectors, spectrum.probabilities):
        v_fock = g @ sec.site_numbers  # diagonal of V in the Fock basis
        v_eig = sec.states.T @ (v_fock[:, None] * sec.states)
        mean_v += float(p @ np.diag(v_eig))
        for blk in _degenerate_blocks(sec.energies):
            sub = v_eig[blk, blk]
            # p is constant across a degenerate block
            diag_sq += float(p[blk.start] * np.trace(sub @ sub))
    return beta**2 * (diag_sq - mean_v**2)


def exact_isothermal_susceptibility(spectrum):
    """Exact dn_i/dv_j at fixed beta (and fixed mu in the grand-canonical
    case), via the Duhamel identity: transition part plus the degenerate
    (Curie-like) term."""
    L = spectrum.spec.L
    chi = np.zeros((L, L))
    means = np.zeros(L)
    beta = spectrum.ensemble.beta
    for sec, p in zip(spectrum.sectors, spectrum.probabilities):
        m_all = _eigenbasis_number_elements(sec)
        d = sec.energies.size
        means += np.array([float(p @ np.diag(m_all[i])) for i in range(L)])
        for n in range(d):
            for m in range(n + 1, d):
                w = sec.energies[m] - sec.energies[n]
                if w <= DEGENERACY_TOL:
                    continue
                dp = p[n] - p[m]
                if abs(dp) < 1e-300:
                    continue
                rho = m_all[:, n, m]
                chi -= 2.0 * dp / w * np.outer(rho, rho)
        for blk in _degenerate_blocks(sec.energies):
            sub = m_all[:, blk, blk]
            pb = p[blk.start]
            # sum over n,m in the block of p * N_i,nm N_j,mn
            chi -= beta * pb * np.einsum("inm,jmn->ij", sub, sub)
    chi += beta * np.outer(means, means)
    return chi


def exact_relaxation_spectrum(spectrum, pattern):
    """Relaxation spectrum on exact data: transition weights from the
    Lehmann poles, adiabatic weight from the variance formula."""
    beta = spectrum.ensemble.beta
    space = exact_transitions(spectrum)
    g = np.asarray(pattern, dtype=float)
    if space.size:
        s = 2.0 * beta * space.pattern_weights(g) / space.omegas
    else:
        s = np.empty(0)
    return RelaxationSpectrum(
        omegas=space.omegas,
        weights=s,
        psi_ad=max(exact_psi_ad(spectrum, g), 0.0),
        beta=beta,
    )


def exact_cumulants(spectrum, pattern, protocol, orders=(1, 2, 3, 4)):
    """Exact cumulant report, evaluated through the same cumulant code
    path as the density-functional pipeline."""
    rs = exact_relaxation_spectrum(spectrum, pattern)
    return cumulant_report(
        rs, protocol, orders=orders, U=spectrum.spec.U
    )


# ---------------------------------------------------------------------------
# Real-time evolution and the relative-entropy dissipated work


def _thermal_density_matrices(spectrum):
    """Block (per-sector) thermal density matrices in the Fock basis."""
    return [
        sec.states @ (p[:, None] * sec.states.T)
        for sec, p in zip(spectrum.sectors, spectrum.probabilities)
    ]


def _relative_entropy(rho_blocks, sigma_blocks):
    """S(rho || sigma) summed over conserved-charge blocks."""
    total = 0.0
    for rho, sigma in zip(rho_blocks, sigma_blocks):
        er, vr = np.linalg.eigh(rho)
        es, vs = np.linalg.eigh(sigma)
        er = np.clip(er, 0.0, None)
        mask = er > 1e-300
        total += float(np.sum(er[mask] * np.log(er[mask])))
        log_sigma = vs @ (np.log(np.clip(es, 1e-300, None))[:, None] * vs.conj().T)
        total -= float(np.trace(rho @ log_sigma).real)
    return total


def exact_dissipated_work_evolution(spec, ensemble, protocol, dt=None):
    """Propagate the thermal state through the linear ramp and return the
    relative-entropy dissipated work.

    Classic fourth-order Runge-Kutta on the von Neumann equation, one
    conserved-particle-number block at a time. Returns a dict with the
    relative-entropy value, the <W> - dF cross-check, and drift metadata.
    """
    v0_vec = staggered_potential(spec, protocol.v0)
    dv_vec = staggered_potential(spec, protocol.dv)
    spectrum0 = exact_spectrum(spec, v0_vec, ensemble)
    rho_blocks = _thermal_density_matrices(spectrum0)
    hams0 = [
        build_many_body_hamiltonian(sec.sector, spec, v0_vec)
        for sec in spectrum0.sectors
    ]
    perts = [
        np.diag(np.asarray(dv_vec) @ sec.site_numbers)
        for sec in spectrum0.sectors
    ]

    tau = protocol.tau
    if tau <= 0:
        # Sudden limit: the state does not evolve.
        final_blocks = rho_blocks
    else:
        hnorm = max(
            float(np.linalg.norm(h + p, 2)) for h, p in zip(hams0, perts)
        )
        if dt is None:
            dt = 0.01 / max(hnorm, 1e-12)
        steps = max(int(np.ceil(tau / dt)), 1)
        dt = tau / steps

        def commutator(h, rho):
            return -1j * (h @ rho - rho @ h)

        final_blocks = []
        for h0, pert, rho in zip(hams0, perts, rho_blocks):
            rho = rho.astype(complex)
            for step in range(steps):
                t = step * dt

                def ham(tt):
                    return h0 + (tt / tau) * pert

                k1 = commutator(ham(t), rho)
                k2 = commutator(ham(t + dt / 2), rho + dt / 2 * k1)
                k3 = commutator(ham(t + dt / 2), rho + dt / 2 * k2)
                k4 = commutator(ham(t + dt), rho + dt * k3)
                rho = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            drift = abs(float(np.trace(rho).real) - float(np.trace(rho_blocks[len(final_blocks)]).real))
            herm = float(np.abs(rho - rho.conj().T).max())
            if drift > 1e-8 or herm > 1e-8:
                raise NumericalError(
                    f"integrator drift: trace {drift:.2e}, hermiticity {herm:.2e}"
                )
            final_blocks.append(rho)

    # Reference thermal state of H(tau) in the same ensemble (same mu when
    # grand-canonical: the target-N solve is not repeated).
    v_tau = v0_vec + dv_vec
    spectrum_tau = exact_spectrum(spec, v_tau, ensemble)
    sigma_blocks = _thermal_density_matrices(spectrum_tau)

    rel_ent = _relative_entropy(
        [np.real_if_close(b) if np.iscomplexobj(b) else b for b in final_blocks],
        sigma_blocks,
    )

    hams_tau = [
        build_many_body_hamiltonian(sec.sector, spec, v_tau)
        for sec in spectrum_tau.sectors
    ]
    beta = ensemble.beta
    work = sum(
        float(np.trace(rho @ h).real) for rho, h in zip(final_blocks, hams_tau)
    ) - sum(float(np.trace(rho @ h).real) for rho, h in zip(rho_blocks, hams0))
    # Free-energy (canonical) or grand-potential (grand-canonical) change
    # between the thermal states at v(0) and v(tau).
    dfree = -(spectrum_tau.log_z - spectrum0.log_z) / beta
    return {
        "relative_entropy": rel_ent,
        "beta_w_diss_energy_route": beta * (work - dfree),
        "final_blocks": final_blocks,
        "reference_blocks": sigma_blocks,
    }
