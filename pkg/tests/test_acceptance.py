"""Acceptance suite: one test per criterion, each emitting a PASS/FAIL line.

Criteria 1, 2, and 4 compare the approximate response pipeline against
exact references on fixed parameter grids. They are implemented exactly
as stated; where the adiabatic local kernel cannot reach the stated
tolerance the test fails honestly rather than loosening the gate.
"""

import time

import numpy as np

import qworkstats as q
from qworkstats import ed
from qworkstats.lattice import DriveProtocol, LatticeSpec, staggered_potential
from qworkstats.response import (
    dress_static,
    dress_transitions,
    fixed_particle_projection,
    grid_dyson_solve,
    isothermal_ks_susceptibility,
    ks_transitions,
    thalda_kernel,
)
from qworkstats.thermal_ks import hxc_potential, scf_solve

from conftest import random_instance, record_acceptance

BENCH_US = (0.5, 1.0, 2.0, 4.0)
BENCH_V0S = (0.5, 1.0, 2.0)
BENCH_TAUS = (0.1, 1.0, 5.0, 20.0)


def _benchmark(kind):
    start = time.monotonic()
    _, means = q.benchmark_dimer(
        BENCH_US, BENCH_V0S, BENCH_TAUS, ensemble_kind=kind, beta=1.0, dv=0.01
    )
    return means, time.monotonic() - start


def test_criterion_1_dimer_benchmark_canonical():
    means, elapsed = _benchmark("canonical")
    ok = all(means[n] < 5e-2 for n in (1, 2, 3)) and elapsed < 30
    detail = (
        "canonical grid means k1=%.3e k2=%.3e k3=%.3e (gate 5e-2), %.1fs"
        % (means[1], means[2], means[3], elapsed)
    )
    assert record_acceptance(1, ok, detail), detail


def test_criterion_2_dimer_benchmark_grand_canonical():
    means, elapsed = _benchmark("grand-canonical")
    ok = all(means[n] < 5e-2 for n in (1, 2, 3)) and elapsed < 60
    detail = (
        "grand-canonical grid means k1=%.3e k2=%.3e k3=%.3e (gate 5e-2), %.1fs"
        % (means[1], means[2], means[3], elapsed)
    )
    assert record_acceptance(2, ok, detail), detail


def test_criterion_3_noninteracting_exactness():
    start = time.monotonic()
    worst = 0.0
    for kind in ("canonical", "grand-canonical"):
        rows, _ = q.benchmark_dimer(
            (0.0,), BENCH_V0S, BENCH_TAUS, ensemble_kind=kind, beta=1.0, dv=0.01
        )
        for row in rows:
            worst = max(worst, row["rel_err1"], row["rel_err2"], row["rel_err3"])
    elapsed = time.monotonic() - start
    ok = worst < 1e-8 and elapsed < 10
    detail = "U=0 worst relative error %.2e (gate 1e-8), %.1fs" % (worst, elapsed)
    assert record_acceptance(3, ok, detail), detail


def test_criterion_4_phase_diagram_ridge():
    start = time.monotonic()
    v0s = np.arange(0.1, 3.0001, 0.05)
    ens = q.half_filled_ensemble("grand-canonical", 1.0, 50)
    deviations = {}
    for u in (1.0, 2.0, 3.0, 4.0):
        spec = LatticeSpec(L=50, U=u)
        vals = [q.sudden_work(q.solve_point(spec, ens, float(v))) for v in v0s]
        v_star = float(v0s[int(np.argmax(vals))])
        deviations[u] = abs(v_star - u / 2) / (u / 2)
    elapsed = time.monotonic() - start
    ok = all(d <= 0.25 for d in deviations.values()) and elapsed < 600
    detail = "argmax deviations from v0=U/2: %s (gate 25%%), %.0fs" % (
        {u: "%.0f%%" % (100 * d) for u, d in deviations.items()},
        elapsed,
    )
    assert record_acceptance(4, ok, detail), detail


def test_criterion_5_adiabatic_gaussianization():
    start = time.monotonic()
    spec = LatticeSpec(L=50, U=1.0)
    ens = q.half_filled_ensemble("grand-canonical", 1.0, 50)
    taus = np.logspace(-1, 2, 40)
    worst = 0.0
    for v0 in (0.5, 1.0, 2.0):
        point = q.solve_point(spec, ens, v0)
        tau_star, k3 = q.k3_crossover(point, taus, 0.01)
        k3 = np.asarray(k3)
        ref = k3[0]  # tau grid starts at 0.1/J
        mask = taus > 10 * tau_star
        assert mask.any()
        worst = max(worst, float(np.max(k3[mask] / ref)))
    elapsed = time.monotonic() - start
    ok = worst < 1e-2 and elapsed < 300
    detail = "max k3(tau)/k3(0.1) beyond 10*tau_star = %.2e (gate 1e-2), %.0fs" % (
        worst, elapsed,
    )
    assert record_acceptance(5, ok, detail), detail


def test_criterion_6_tur_bound_and_saturation():
    spec = LatticeSpec(L=50, U=1.0)
    ens = q.half_filled_ensemble("grand-canonical", 1.0, 50)
    fanos = []
    sat = np.inf
    short_margin = np.inf
    for v0 in (0.5, 1.0, 2.0):
        point = q.solve_point(spec, ens, v0)
        for tau in (0.1, 1.0, 10.0, 500.0):
            fano = q.cumulants_at(point, tau, 0.01).fano()
            fanos.append(fano)
            if tau == 500.0:
                sat = min(sat, fano - 2.0)
            if tau == 0.1:
                short_margin = min(short_margin, fano - 2.0)
    ok = (
        all(f >= 2.0 - 1e-12 for f in fanos)
        and sat < 1e-3
        and short_margin > 0
    )
    detail = (
        "min beta*F=%.6f, adiabatic saturation gap %.1e (gate 1e-3), "
        "margin at tau=0.1: %.2f" % (min(fanos), sat, short_margin)
    )
    assert record_acceptance(6, ok, detail), detail


def test_criterion_7_positivity_suite():
    start = time.monotonic()
    rng = np.random.default_rng(7)
    failures = 0
    for _ in range(200):
        spec, ens, v0 = random_instance(rng)
        point = q.solve_point(spec, ens, v0)
        if point.spectrum.psi_ad < 0 or np.any(point.spectrum.weights < 0):
            failures += 1
            continue
        report = q.cumulants_at(point, float(rng.uniform(0.05, 20)), 0.01)
        if any(report.values[n].total < -1e-18 for n in (1, 2, 3, 4)):
            failures += 1
    elapsed = time.monotonic() - start
    ok = failures == 0 and elapsed < 120
    detail = "200 randomized instances, %d positivity violations, %.0fs" % (
        failures, elapsed,
    )
    assert record_acceptance(7, ok, detail), detail


def test_criterion_8_sudden_limit_consistency():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(50):
        spec, ens, v0 = random_instance(rng)
        point = q.solve_point(spec, ens, v0)
        dv = 0.01
        k1 = q.cumulants_at(point, 1e-6, dv, orders=(1,)).values[1].total
        closed = q.sudden_work(point) * dv**2
        if closed > 1e-14:
            worst = max(worst, abs(k1 / closed - 1.0))
    ok = worst < 1e-6
    detail = "50 instances, worst sudden-limit deviation %.2e (gate 1e-6)" % worst
    assert record_acceptance(8, ok, detail), detail


def test_criterion_9_relative_entropy_scaling():
    spec = LatticeSpec(L=2, U=1.0)
    ens = q.half_filled_ensemble("canonical", 1.0, 2)
    spectrum = ed.exact_spectrum(spec, staggered_potential(spec, 0.5), ens)
    ratios = {}
    ok = True
    for tau in (0.1, 1.0, 10.0):
        gaps = []
        for dv in (0.02, 0.01):
            proto = DriveProtocol(v0=0.5, dv=dv, tau=tau)
            k1 = (
                ed.exact_cumulants(spectrum, spec.pattern, proto, orders=(1,))
                .values[1]
                .total
            )
            out = ed.exact_dissipated_work_evolution(spec, ens, proto)
            gaps.append(abs(out["relative_entropy"] / k1 - 1.0))
        ratios[tau] = gaps[0] / gaps[1]
        ok = ok and ratios[tau] >= 1.5
    detail = "gap(0.02)/gap(0.01) per tau: %s (gate >= 1.5)" % (
        {t: "%.2f" % r for t, r in ratios.items()},
    )
    assert record_acceptance(9, ok, detail), detail


def test_criterion_10_numerical_cross_checks():
    # (a) analytic f_hxc vs central finite difference, step 1e-6
    h = 1e-6
    worst_f = 0.0
    for n in np.linspace(0.1, 1.9, 13):
        for u in (0.3, 1.0, 4.0):
            for beta in (0.5, 1.0, 3.0):
                f = hxc_potential(n, u, beta).f_hxc
                fd = (
                    hxc_potential(n + h, u, beta).v_hxc
                    - hxc_potential(n - h, u, beta).v_hxc
                ) / (2 * h)
                worst_f = max(worst_f, abs(f - fd) / max(abs(f), 1e-30))

    # (b) pole-dressed chi vs grid-Dyson solve away from poles
    spec = LatticeSpec(L=2, U=1.0)
    ens = q.half_filled_ensemble("grand-canonical", 1.0, 2)
    state = scf_solve(spec, ens, staggered_potential(spec, 0.5))
    space = ks_transitions(state)
    kernel = thalda_kernel(state)
    dressed = dress_transitions(space, kernel)
    eta = 1e-3
    rng = np.random.default_rng(10)
    omegas = np.array(
        [
            w
            for w in rng.uniform(0.05, 6.0, 200)
            if np.min(np.abs(w - dressed.omegas)) > 10 * eta
        ]
    )
    chi_grid = grid_dyson_solve(space, kernel, omegas, eta=eta)
    worst_g = 0.0
    for w, chi in zip(omegas, chi_grid):
        ref = dressed.evaluate(w + 1j * eta)
        worst_g = max(
            worst_g, float(np.max(np.abs(ref - chi)) / np.max(np.abs(ref)))
        )

    # (c) dressed static response vs SCF-density finite differences
    chi_stat = fixed_particle_projection(
        dress_static(isothermal_ks_susceptibility(state), kernel)
    )
    hh = 1e-5
    fd = np.zeros((2, 2))
    for j in range(2):
        dv = np.zeros(2)
        dv[j] = hh
        np_p = scf_solve(spec, ens, state.v_ext + dv).densities
        np_m = scf_solve(spec, ens, state.v_ext - dv).densities
        fd[:, j] = (np_p - np_m) / (2 * hh)
    worst_s = float(np.max(np.abs(chi_stat - fd)) / np.max(np.abs(fd)))

    ok = worst_f < 1e-6 and worst_g < 1e-8 and worst_s < 1e-5
    detail = (
        "f_hxc FD %.1e (<1e-6), dressed vs grid-Dyson %.1e (<1e-8), "
        "static vs SCF FD %.1e (<1e-5)" % (worst_f, worst_g, worst_s)
    )
    assert record_acceptance(10, ok, detail), detail
