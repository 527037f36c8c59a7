"""End-to-end glue: SCF -> response -> dressing -> work statistics.

`solve_point` runs everything that depends only on (lattice, ensemble,
v0); cumulants for any number of ramp durations are then cheap
evaluations over the resulting relaxation spectrum.

For the grand-canonical ensemble the Kohn-Sham response is the analytic
Fermi-factor (Lindhard) form, exact for the noninteracting reference. The
canonical ensemble has no Wick factorization, so the KS response and the
isothermal KS susceptibility are built by exact diagonalization of the
noninteracting KS Hamiltonian in the fixed-(Nup, Ndown) sector; this is
only intended for benchmark-scale chains.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import ed
from .lattice import DriveProtocol, LatticeSpec, staggered_potential
from .response import (
    compress_transitions,
    dress_static,
    dress_transitions,
    isothermal_ks_susceptibility,
    ks_transitions,
    thalda_kernel,
)
from .thermal_ks import EnsembleSpec, scf_solve
from .workstats import (
    crossover_time,
    cumulant_report,
    dissipated_work_sudden,
    relaxation_spectrum,
)


@dataclass(frozen=True)
class PointResult:
    """Everything computed for one (lattice, ensemble, v0) point."""

    spec: LatticeSpec
    ensemble: EnsembleSpec
    v0: float
    state: object
    kernel: np.ndarray
    ks_space: object
    dressed_space: object
    chi_iso_dressed: np.ndarray
    spectrum: object


def _canonical_ks_response(state):
    """Exact response and isothermal susceptibility of the noninteracting
    KS Hamiltonian in the canonical sector."""
    spec_ks = replace(state.spec, U=0.0)
    ens = state.ensemble
    spectrum = ed.exact_spectrum(spec_ks, state.v_ks, ens)
    space = compress_transitions(ed.exact_transitions(spectrum))
    return space, ed.exact_isothermal_susceptibility(spectrum)


def solve_point(spec, ensemble, v0, scf_options=None):
    """SCF solve plus dressed response and relaxation spectrum at v0."""
    scf_options = scf_options or {}
    v_ext = staggered_potential(spec, v0)
    state = scf_solve(spec, ensemble, v_ext, **scf_options)
    kernel = thalda_kernel(state)
    if ensemble.kind == "grand-canonical":
        ks_space = ks_transitions(state)
        chi_iso = isothermal_ks_susceptibility(state)
    else:
        ks_space, chi_iso = _canonical_ks_response(state)
    dressed = dress_transitions(ks_space, kernel)
    chi_iso_dressed = dress_static(chi_iso, kernel)
    spectrum = relaxation_spectrum(
        dressed, spec.pattern, chi_iso_dressed, ensemble.beta
    )
    return PointResult(
        spec=spec,
        ensemble=ensemble,
        v0=v0,
        state=state,
        kernel=kernel,
        ks_space=ks_space,
        dressed_space=dressed,
        chi_iso_dressed=chi_iso_dressed,
        spectrum=spectrum,
    )


def sudden_work(point):
    """beta <W_diss> / (dv)^2 for a sudden staggered quench at this point."""
    return dissipated_work_sudden(
        point.chi_iso_dressed, point.spec.pattern, point.ensemble.beta
    )


def cumulants_at(point, tau, dv, orders=(1, 2, 3, 4), shape="linear-ramp"):
    protocol = DriveProtocol(v0=point.v0, dv=dv, tau=tau, shape=shape)
    return cumulant_report(
        point.spectrum, protocol, orders=orders, v0=point.v0, U=point.spec.U
    )


def k3_crossover(point, taus, dv):
    """tau* extracted from the third-cumulant curve on the given tau grid."""
    k3 = [cumulants_at(point, t, dv, orders=(3,)).values[3].total for t in taus]
    return crossover_time(taus, k3), k3


def half_filled_ensemble(kind, beta, L):
    if kind == "grand-canonical":
        return EnsembleSpec(kind="grand-canonical", beta=beta, target_n=float(L))
    return EnsembleSpec(kind="canonical", beta=beta, nup=L // 2, ndown=L - L // 2)


# ---------------------------------------------------------------------------
# Dimer benchmark harness


def benchmark_dimer(
    u_values,
    v0_values,
    tau_values,
    ensemble_kind="canonical",
    beta=1.0,
    dv=0.01,
    J=1.0,
    orders=(1, 2, 3),
):
    """Compare pipeline cumulants against exact diagonalization on a grid.

    Returns (rows, means): one row per (U, v0, tau) with both values and
    relative errors per order, and the grid-mean relative error per order.
    """
    rows = []
    errors = {n: [] for n in orders}
    for u in u_values:
        spec = LatticeSpec(L=2, J=J, U=u)
        ensemble = half_filled_ensemble(ensemble_kind, beta, 2)
        for v0 in v0_values:
            point = solve_point(spec, ensemble, v0)
            exact = ed.exact_spectrum(
                spec, staggered_potential(spec, v0), ensemble
            )
            for tau in tau_values:
                protocol = DriveProtocol(v0=v0, dv=dv, tau=tau)
                dft = cumulant_report(
                    point.spectrum, protocol, orders=orders, v0=v0, U=u
                )
                ref = ed.exact_cumulants(exact, spec.pattern, protocol, orders=orders)
                row = {"U": u, "v0": v0, "tau": tau}
                for n in orders:
                    kd = dft.values[n].total
                    ke = ref.values[n].total
                    rel = abs(kd - ke) / abs(ke) if ke != 0 else abs(kd)
                    row[f"k{n}_dft"] = kd
                    row[f"k{n}_ed"] = ke
                    row[f"rel_err{n}"] = rel
                    errors[n].append(rel)
                rows.append(row)
    means = {n: float(np.mean(errors[n])) for n in orders}
    return rows, means
