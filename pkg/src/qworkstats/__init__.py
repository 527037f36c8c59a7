"""Quantum work statistics of driven Hubbard chains from linear-response
thermal density functional theory, with an exact-diagonalization oracle."""

from .errors import (
    CapacityError,
    ConvergenceError,
    InputError,
    NumericalError,
    QWorkStatsError,
    StabilityError,
)
from .lattice import (
    DriveProtocol,
    FockSector,
    LatticeSpec,
    build_many_body_hamiltonian,
    build_single_particle_hamiltonian,
    number_operator_matrix,
    staggered_potential,
)
from .pipeline import (
    PointResult,
    benchmark_dimer,
    cumulants_at,
    half_filled_ensemble,
    k3_crossover,
    solve_point,
    sudden_work,
)
from .response import (
    ResponsePoles,
    TransitionSpace,
    compress_transitions,
    dress_static,
    dress_transitions,
    fixed_particle_projection,
    grid_dyson_solve,
    isothermal_ks_susceptibility,
    ks_transitions,
    merge_poles,
    static_response,
    thalda_kernel,
)
from .thermal_ks import (
    EnsembleSpec,
    HxcEvaluation,
    ThermalKsState,
    find_mu,
    hxc_potential,
    scf_solve,
    thermal_occupations,
)
from .workstats import (
    CumulantReport,
    RelaxationSpectrum,
    crossover_time,
    cumulant,
    cumulant_report,
    dissipated_work_sudden,
    fano_factor,
    gamma_coefficient,
    protocol_spectral_weight,
    relaxation_spectrum,
)

__version__ = "0.1.0"
