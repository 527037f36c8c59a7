"""Dissipated-work cumulants from a relaxation spectrum.

The relaxation function is carried in frequency space as nonnegative
weights on the positive excitation frequencies plus a single
zero-frequency adiabatic weight:

    beta^n k_n = sum_k s_k gamma_n(omega_k) b_tau(omega_k)
               + psi_ad * gamma_n(0) * b_tau(0),

with gamma_n the model-independent coefficients and b_tau the spectral
weight of the driving protocol. The normalization of s_k is pinned by the
sudden-limit identity beta*k_1 = -(beta/2) sum_ij dv_i dv_j dn_i/dv_j,
which fixes s_k = 2*beta*r_k/omega_k in terms of the drive-projected
residues r_k, and makes the adiabatic weight a subtraction:

    psi_ad = -beta * g.chi_iso.g - sum_k s_k,

where chi_iso is the isothermal (SCF) density derivative. Note the single
power of beta: the exact Duhamel identity for the thermal density
derivative requires it, and it reduces to the familiar beta^2 form only
at beta*J = 1.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import StabilityError

GAMMA_SMALL = 1e-8
WEIGHT_CLIP = 1e-12


def gamma_coefficient(n, omega, beta):
    """gamma_n(omega) = (1/2)(beta*omega)^(n-1) * [coth(beta*omega/2) if n
    even else 1], with series limits at beta*omega -> 0."""
    if n < 1:
        raise ValueError("cumulant order must be >= 1")
    if beta <= 0:
        raise ValueError("beta must be positive")
    x = beta * omega
    if abs(x) < GAMMA_SMALL:
        if n == 1:
            return 0.5
        if n == 2:
            return 1.0
        return 0.0
    base = 0.5 * x ** (n - 1)
    if n % 2 == 0:
        return base / math.tanh(0.5 * x)
    return base


def protocol_spectral_weight(omega, protocol):
    """b_tau(omega) = |integral_0^tau dt lambda_dot(t) e^{i omega t}|^2.

    Linear ramp: (dv)^2 * 2(1 - cos(omega*tau)) / (omega*tau)^2, computed
    as (dv)^2 * sinc(x/2)^2 to avoid cancellation at small x; both the
    omega -> 0 and tau -> 0 limits equal (dv)^2, which is also the sudden
    value at every frequency.
    """
    dv2 = protocol.dv**2
    if protocol.shape == "sudden" or protocol.tau == 0:
        return dv2
    x = omega * protocol.tau
    half = 0.5 * x
    if half == 0.0:
        return dv2
    s = math.sin(half) / half
    return dv2 * s * s


@dataclass(frozen=True)
class RelaxationSpectrum:
    """Nonadiabatic weights {(omega_k, s_k)} plus the adiabatic weight."""

    omegas: np.ndarray
    weights: np.ndarray
    psi_ad: float
    beta: float
    clipped: int = 0

    def total_weight(self):
        return float(self.weights.sum() + self.psi_ad)

    def reconstruct(self, t):
        """psi(t) as the even cosine sum over the stored weights; the
        adiabatic part is the t-independent offset."""
        na = float(np.sum(self.weights * np.cos(self.omegas * t)))
        return na + self.psi_ad


@dataclass(frozen=True)
class CumulantValue:
    total: float
    adiabatic: float
    nonadiabatic: float


@dataclass(frozen=True)
class CumulantReport:
    """Dimensionless cumulants beta^n k_n keyed by order."""

    values: dict
    tau: float
    beta: float
    v0: float = None
    U: float = None
    meta: dict = field(default_factory=dict)

    def fano(self):
        """beta * F_W = beta^2 k_2 / (beta k_1); None when k_1 = 0."""
        k1 = self.values[1].total
        if k1 <= 0:
            return None
        return self.values[2].total / k1


def relaxation_spectrum(space, pattern, chi_iso_dressed, beta):
    """Assemble the relaxation spectrum from a dressed transition space.

    `chi_iso_dressed` is the isothermal density derivative dn_i/dv_j of
    the self-consistent system (kernel-dressed), which carries the total
    sudden weight; the adiabatic weight is the remainder after removing
    the transition contributions.
    """
    g = np.asarray(pattern, dtype=float)
    r = space.pattern_weights(g)
    s = 2.0 * beta * r / space.omegas if space.size else np.empty(0)
    clipped = 0
    if s.size:
        tiny = np.abs(s) < WEIGHT_CLIP * max(s.max(initial=0.0), 0.0)
        clipped = int(np.sum(tiny & (s < 0)))
        s = np.where(s < 0, 0.0, s)

    total = -beta * float(g @ chi_iso_dressed @ g)
    psi_ad = total - float(s.sum())
    if psi_ad < -1e-10 * max(1.0, abs(total)):
        raise StabilityError(
            f"negative adiabatic weight {psi_ad:.3e}; response inputs are "
            "inconsistent"
        )
    psi_ad = max(psi_ad, 0.0)
    return RelaxationSpectrum(
        omegas=space.omegas.copy(),
        weights=s,
        psi_ad=psi_ad,
        beta=beta,
        clipped=clipped,
    )


def cumulant(n, spectrum, protocol):
    """beta^n k_n split into (total, adiabatic, nonadiabatic)."""
    beta = spectrum.beta
    na = 0.0
    for w, s in zip(spectrum.omegas, spectrum.weights):
        if s == 0.0:
            continue
        na += s * gamma_coefficient(n, w, beta) * protocol_spectral_weight(w, protocol)
    ad = (
        spectrum.psi_ad
        * gamma_coefficient(n, 0.0, beta)
        * protocol_spectral_weight(0.0, protocol)
    )
    return CumulantValue(total=na + ad, adiabatic=ad, nonadiabatic=na)


def cumulant_report(spectrum, protocol, orders=(1, 2, 3, 4), v0=None, U=None):
    values = {n: cumulant(n, spectrum, protocol) for n in orders}
    return CumulantReport(
        values=values,
        tau=protocol.tau,
        beta=spectrum.beta,
        v0=v0 if v0 is not None else protocol.v0,
        U=U,
    )


def dissipated_work_sudden(chi_iso_dressed, pattern, beta):
    """beta <W_diss> / (dv)^2 for a sudden quench along the pattern."""
    g = np.asarray(pattern, dtype=float)
    val = -0.5 * beta * float(g @ chi_iso_dressed @ g)
    if val < -1e-10:
        raise StabilityError(f"negative sudden dissipated work {val:.3e}")
    return max(val, 0.0)


def fano_factor(report):
    """beta * Var(W) / <W_diss>; absent (None) when the first cumulant
    vanishes."""
    return report.fano()


def crossover_time(taus, k3_values, flat_tol=1e-14):
    """tau* = argmax over interior grid points of |dk3/dtau| by central
    differences; ties break toward smaller tau; None for a flat curve."""
    taus = np.asarray(taus, dtype=float)
    k3 = np.asarray(k3_values, dtype=float)
    if taus.size < 8:
        raise ValueError("crossover extraction needs at least 8 samples")
    if np.any(np.diff(taus) <= 0):
        raise ValueError("tau grid must be strictly increasing")
    deriv = np.abs((k3[2:] - k3[:-2]) / (taus[2:] - taus[:-2]))
    if deriv.max(initial=0.0) < flat_tol:
        return None
    best = int(np.argmax(deriv))  # argmax returns the first (smallest tau) tie
    return float(taus[best + 1])
