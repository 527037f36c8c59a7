import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import qworkstats as q
from qworkstats import ed
from qworkstats.lattice import DriveProtocol, LatticeSpec, staggered_potential
from qworkstats.workstats import (
    RelaxationSpectrum,
    crossover_time,
    cumulant,
    cumulant_report,
    dissipated_work_sudden,
    gamma_coefficient,
    protocol_spectral_weight,
)

from conftest import assert_close


def test_gamma_zero_frequency_values():
    assert gamma_coefficient(1, 0.0, 1.0) == pytest.approx(0.5)
    assert gamma_coefficient(2, 0.0, 1.0) == pytest.approx(1.0)
    assert gamma_coefficient(3, 0.0, 1.0) == 0.0
    assert gamma_coefficient(4, 0.0, 1.0) == 0.0


def test_gamma_closed_forms():
    beta, w = 1.7, 0.9
    x = beta * w
    assert gamma_coefficient(1, w, beta) == pytest.approx(0.5)
    assert gamma_coefficient(2, w, beta) == pytest.approx(
        0.5 * x / math.tanh(x / 2)
    )
    assert gamma_coefficient(3, w, beta) == pytest.approx(0.5 * x**2)
    assert gamma_coefficient(4, w, beta) == pytest.approx(
        0.5 * x**3 / math.tanh(x / 2)
    )


@settings(max_examples=60, deadline=None)
@given(
    w=st.floats(min_value=1e-4, max_value=50.0),
    beta=st.floats(min_value=0.05, max_value=10.0),
)
def test_tur_gamma_inequality(w, beta):
    # gamma_2 >= 2 gamma_1 at every frequency: x coth(x/2) >= 2.
    assert gamma_coefficient(2, w, beta) >= 2 * gamma_coefficient(1, w, beta) - 1e-12


def test_protocol_weight_limits():
    ramp = DriveProtocol(v0=0.5, dv=0.01, tau=2.0)
    sudden = DriveProtocol(v0=0.5, dv=0.01, tau=0.0, shape="sudden")
    assert protocol_spectral_weight(1.3, sudden) == pytest.approx(0.01**2)
    # omega -> 0 recovers the sudden weight for any tau.
    assert protocol_spectral_weight(1e-9, ramp) == pytest.approx(0.01**2)
    # Exact closed form at finite omega*tau.
    w = 1.7
    x = w * 2.0
    assert protocol_spectral_weight(w, ramp) == pytest.approx(
        0.01**2 * 2 * (1 - math.cos(x)) / x**2
    )
    assert protocol_spectral_weight(w, ramp) <= 0.01**2


def test_spectrum_reconstruction_is_even():
    spec = RelaxationSpectrum(
        omegas=np.array([1.0, 2.5]),
        weights=np.array([0.3, 0.1]),
        psi_ad=0.05,
        beta=1.0,
    )
    for t in (0.0, 0.7, 3.2):
        assert spec.reconstruct(t) == pytest.approx(spec.reconstruct(-t))
    assert spec.total_weight() == pytest.approx(0.45)


def test_empty_spectrum_gives_zero_cumulants():
    spec = RelaxationSpectrum(
        omegas=np.empty(0), weights=np.empty(0), psi_ad=0.0, beta=1.0
    )
    proto = DriveProtocol(v0=0.5, dv=0.01, tau=1.0)
    for n in (1, 2, 3, 4):
        assert cumulant(n, spec, proto).total == 0.0


def test_third_cumulant_adiabatic_decay_bound():
    spec = RelaxationSpectrum(
        omegas=np.array([1.0, 3.0]),
        weights=np.array([0.4, 0.2]),
        psi_ad=0.1,
        beta=1.0,
    )
    dv = 0.01
    for tau in (10.0, 40.0, 200.0):
        proto = DriveProtocol(v0=0.5, dv=dv, tau=tau)
        k3 = cumulant(3, spec, proto).total
        bound = sum(
            s * gamma_coefficient(3, w, 1.0) * dv**2 * 4 / (w * tau) ** 2
            for w, s in zip(spec.omegas, spec.weights)
        )
        assert 0 <= k3 <= bound + 1e-18
    # adiabatic part of k3 vanishes identically (gamma_3(0) = 0)
    assert cumulant(3, spec, DriveProtocol(v0=0.5, dv=dv, tau=5.0)).adiabatic == 0.0


def test_sudden_k1_identity(dimer_point):
    # GLRT k1 in the sudden limit equals the closed-form static expression.
    report = q.cumulants_at(dimer_point, 1e-9, 0.01, orders=(1,))
    closed = q.sudden_work(dimer_point) * 0.01**2
    assert_close(report.values[1].total, closed, 1e-8, "sudden k1")


def test_report_fano_and_tur(dimer_point):
    for tau in (0.1, 1.0, 30.0):
        report = q.cumulants_at(dimer_point, tau, 0.01)
        fano = report.fano()
        assert fano is not None and fano >= 2.0 - 1e-12
        assert report.values[2].total - 2 * report.values[1].total >= -1e-18


def test_crossover_time_synthetic():
    taus = np.logspace(-1, 2, 60)
    k3 = np.exp(-taus / 3.0)
    tau_star = crossover_time(taus, k3)
    # Monotone decaying exponential: max |dk3/dtau| at the first interior
    # point of the grid.
    assert tau_star == pytest.approx(taus[1])
    assert crossover_time(taus, np.ones_like(taus)) is None


def test_psi_ad_vanishes_at_low_temperature():
    # beta -> infinity with a nondegenerate ground state: the thermal
    # variance of the diagonal drive elements vanishes.
    spec = LatticeSpec(L=2, U=1.0)
    ens = q.half_filled_ensemble("canonical", 50.0, 2)
    exact = ed.exact_spectrum(spec, staggered_potential(spec, 0.5), ens)
    psi = ed.exact_psi_ad(exact, spec.pattern)
    assert psi >= 0
    assert psi < 1e-10


def test_dissipated_work_sudden_properties(gc_dimer_point):
    val = q.sudden_work(gc_dimer_point)
    assert val > 0
    # Deep band insulator at U=0: response suppressed with growing v0.
    spec = LatticeSpec(L=2, U=0.0)
    ens = q.half_filled_ensemble("grand-canonical", 1.0, 2)
    vals = [
        q.sudden_work(q.solve_point(spec, ens, v0)) for v0 in (2.0, 6.0, 12.0)
    ]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-3


def test_cumulant_report_contents(dimer_point):
    report = q.cumulants_at(dimer_point, 1.0, 0.01, orders=(1, 2, 3))
    assert set(report.values) == {1, 2, 3}
    v = report.values[1]
    assert v.total == pytest.approx(v.adiabatic + v.nonadiabatic)
