"""Closed-form and quadrature estimates of the selection efficiency.

Selection convention: the spatial acceptance runs from the barrier rest
position x_D upwards only (one-sided), while the velocity acceptance is the
symmetric window |v| < v_c.  Relative to a symmetric spatial window this
halves the acceptance of a cloud centred on x_D = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .potential import critical_velocity, effective_temperature
from .units import MASS_RB85, velocity_from_temperature

KINETIC = "kinetic-dominated"
INTERMEDIATE = "intermediate"
POTENTIAL = "potential-dominated"

# ratio thresholds for regime labels
KINETIC_RATIO = 10.0
POTENTIAL_RATIO = 0.1


@dataclass(frozen=True)
class CloudSpec:
    r0: float   # rms radius, um
    T0: float   # nK, T0 = m v0^2 / k_B
    mass: float = MASS_RB85

    def __post_init__(self):
        if not self.r0 > 0:
            raise ValueError(f"r0 must be > 0, got {self.r0}")
        if not self.T0 > 0:
            raise ValueError(f"T0 must be > 0, got {self.T0}")

    @property
    def v0(self):
        return float(velocity_from_temperature(self.T0, self.mass))


@dataclass(frozen=True)
class SelectionSpec:
    U_eff: float
    gradient: float
    x_D: float = 0.0
    mass: float = MASS_RB85

    @property
    def T_eff(self):
        return effective_temperature(self.U_eff)

    @property
    def v_c(self):
        return float(critical_velocity(self.U_eff, self.mass))

    def x_c(self, v=0.0):
        """Critical position for an atom of velocity v: (U_eff - m v^2/2) / g."""
        if self.gradient == 0:
            return math.inf
        return (self.U_eff - 0.5 * self.mass * np.asarray(v) ** 2) / self.gradient


@dataclass(frozen=True)
class RegimeReport:
    KE_i: float
    PE_i: float
    ratio: float
    regime: str


def _clip(eta):
    return float(min(max(eta, 0.0), 1.0))


def eta_ke(T_eff, T0):
    """Kinetic-only efficiency, erf(sqrt(T_eff / (2 T0)))."""
    if T0 <= 0 or T_eff < 0:
        raise ValueError("need T0 > 0 and T_eff >= 0")
    return float(special.erf(math.sqrt(T_eff / (2.0 * T0))))


def eta_ke_lowbarrier(T_eff, T0):
    """Linearised erf: sqrt(2 T_eff / (pi T0)).  Valid for T_eff < T0; clipped at 1."""
    if T0 <= 0 or T_eff < 0:
        raise ValueError("need T0 > 0 and T_eff >= 0")
    return _clip(math.sqrt(2.0 * T_eff / (math.pi * T0)))


def _spatial_fraction(x_lo, x_hi, r0):
    if x_hi <= x_lo:
        return 0.0
    # ndtr differences lose precision deep in the upper tail; mirror there
    if x_lo > 0:
        return float(special.ndtr(-x_lo / r0) - special.ndtr(-x_hi / r0))
    return float(special.ndtr(x_hi / r0) - special.ndtr(x_lo / r0))


def eta_pe(T_eff, cloud, gradient, x_D=0.0):
    """Spatial-only efficiency: Gaussian mass between x_D and x_c = T_eff / (2 g)."""
    if gradient <= 0:
        raise ValueError("eta_pe needs gradient > 0")
    if T_eff < 0:
        raise ValueError("T_eff must be >= 0")
    x_c = T_eff / (2.0 * gradient)
    return _clip(_spatial_fraction(x_D, x_c, cloud.r0))


def eta_pe_lowbarrier(T_eff, cloud, gradient):
    if gradient <= 0:
        raise ValueError("gradient must be > 0")
    if T_eff < 0:
        raise ValueError("T_eff must be >= 0")
    return _clip(math.sqrt(2.0 / math.pi) * T_eff / (2.0 * cloud.r0 * gradient))


def beta_coefficient(cloud, gradient):
    """Prefactor of the T_eff^{3/2} law, 1 / (sqrt(T0) r0 pi g)."""
    return 1.0 / (math.sqrt(cloud.T0) * cloud.r0 * math.pi * gradient)


def eta_lowbarrier_combined(T_eff, cloud, gradient):
    if gradient <= 0:
        raise ValueError("gradient must be > 0")
    if T_eff < 0:
        raise ValueError("T_eff must be >= 0")
    return _clip(beta_coefficient(cloud, gradient) * T_eff**1.5)


def eta_full(U_eff, cloud, gradient, x_D=0.0, epsabs=1e-10):
    """Joint velocity/position acceptance.

    The inner spatial integral is the normal CDF between x_D and
    x_c(v) = (U_eff - m v^2/2) / g (clipped to be >= x_D); the outer velocity
    integral over |v| < v_c is done by adaptive quadrature.  g = 0 is the
    x_c -> inf limit.
    """
    if U_eff < 0:
        raise ValueError("U_eff must be >= 0")
    if gradient < 0:
        raise ValueError("gradient must be >= 0")
    if U_eff == 0:
        return 0.0
    sel = SelectionSpec(U_eff, gradient, x_D, cloud.mass)
    v0, r0, v_c = cloud.v0, cloud.r0, sel.v_c
    if gradient == 0:
        return _clip(eta_ke(sel.T_eff, cloud.T0) * _spatial_fraction(x_D, math.inf, r0))

    def integrand(v):
        return math.exp(-0.5 * (v / v0) ** 2) * _spatial_fraction(x_D, float(sel.x_c(v)), r0)

    # symmetric in v; integrate one half.  Where x_c(v) <= x_D the integrand
    # vanishes, so cut the range there too.
    v_top = v_c
    if x_D > 0:
        v_top = math.sqrt(max(0.0, 2.0 * (U_eff - gradient * x_D) / cloud.mass))
        if v_top == 0:
            return 0.0
    val, _ = integrate.quad(integrand, 0.0, v_top, epsabs=epsabs, epsrel=1e-10, limit=200)
    return _clip(2.0 * val / (math.sqrt(2 * math.pi) * v0))


def regime(cloud, gradient):
    """Kinetic vs magnetic-potential energy content of the initial cloud."""
    KE = 0.5 * cloud.T0
    PE = math.sqrt(2.0 / math.pi) * gradient * cloud.r0
    ratio = math.inf if PE == 0 else KE / PE
    if ratio > KINETIC_RATIO:
        label = KINETIC
    elif ratio < POTENTIAL_RATIO:
        label = POTENTIAL
    else:
        label = INTERMEDIATE
    return RegimeReport(KE_i=KE, PE_i=PE, ratio=ratio, regime=label)


def scaling_exponent(eta_fn, T_eff_lo, T_eff_hi, n=25):
    """Least-squares slope of log(eta) against log(T_eff) on a log grid."""
    T = np.geomspace(T_eff_lo, T_eff_hi, n)
    eta = np.array([eta_fn(t) for t in T])
    slope, _ = np.polyfit(np.log(T), np.log(eta), 1)
    return float(slope)
