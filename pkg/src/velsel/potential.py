"""Combined quadrupole-trap + Gaussian dipole-barrier potential.

    U(x) = g |x| + U0 exp(-(x - x_D)^2 / (2 w0^2))

with g = mu B' / k_B in nK/um.  The selection well sits on the far side of
the barrier (x > x_D for a sweep towards +x), bounded by the falling flank of
the barrier and the rising magnetic slope.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate, optimize

from .units import HBAR, MASS_RB85


@dataclass(frozen=True)
class PotentialSpec:
    gradient: float          # nK/um
    barrier_height: float    # nK
    barrier_width: float     # rms, um
    barrier_position: float = 0.0  # um

    def __post_init__(self):
        if not self.gradient >= 0:
            raise ValueError(f"gradient must be >= 0, got {self.gradient}")
        if not self.barrier_height >= 0:
            raise ValueError(f"barrier_height must be >= 0, got {self.barrier_height}")
        if not self.barrier_width > 0:
            raise ValueError(f"barrier_width must be > 0, got {self.barrier_width}")

    def at(self, barrier_position):
        return replace(self, barrier_position=float(barrier_position))


def barrier(spec, x, barrier_position=None):
    xd = spec.barrier_position if barrier_position is None else barrier_position
    u = np.asarray(x, dtype=float) - xd
    return spec.barrier_height * np.exp(-u * u / (2.0 * spec.barrier_width**2))


def evaluate(spec, x, barrier_position=None):
    """U(x) in nK.  ``barrier_position`` overrides ``spec.barrier_position``."""
    x = np.asarray(x, dtype=float)
    return spec.gradient * np.abs(x) + barrier(spec, x, barrier_position)


def derivative(spec, x, barrier_position=None):
    """dU/dx in nK/um, with d|x|/dx = sign(x) and sign(0) = 0."""
    xd = spec.barrier_position if barrier_position is None else barrier_position
    x = np.asarray(x, dtype=float)
    u = x - xd
    w2 = spec.barrier_width**2
    return spec.gradient * np.sign(x) - barrier(spec, x, xd) * u / w2


def second_derivative(spec, x, barrier_position=None):
    """d2U/dx2 away from the cusp at x = 0."""
    xd = spec.barrier_position if barrier_position is None else barrier_position
    u = np.asarray(x, dtype=float) - xd
    w2 = spec.barrier_width**2
    return barrier(spec, x, xd) * (u * u / w2 - 1.0) / w2


@dataclass(frozen=True)
class WellAnalysis:
    exists: bool
    x_localmax: float = math.nan
    x_localmin: float = math.nan
    U_max: float = math.nan
    U_min: float = math.nan
    U_eff: float = 0.0
    T_eff: float = 0.0
    omega: float = 0.0           # rad/ms
    E0: float = 0.0              # nK, ground level of the local harmonic fit
    level_spacing: float = 0.0   # nK

    @property
    def frequency_hz(self):
        return self.omega * 1e3 / (2 * math.pi)


def _bisect(f, a, b):
    # run to float resolution; a 1e-6 um bracket still leaves |dU/dx| ~ 1e-6
    # keyed on the sign at b: f(a) may be exactly zero at the cusp
    fb = f(b)
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mid in (a, b):
            break
        if (f(mid) > 0) == (fb > 0):
            b = mid
        else:
            a = mid
    return 0.5 * (a + b)


def well_analysis(spec, mass=MASS_RB85, hbar=HBAR):
    """Locate the selection well on the +x side of the barrier.

    Stationary points of U for x > max(x_D, 0) are bracketed from the sign
    of dU/dx on the barrier-relative coordinate u = x - x_D and refined by
    bisection.  dU/dx = g - U0 u/w0^2 exp(-u^2/2w0^2) is positive at u = 0,
    reaches its minimum at u = w0 and recovers to g as u -> inf, so a well
    exists iff the value at u = w0 is negative.  A barrier sitting at
    negative x_D is handled by restricting the search to x > 0.
    """
    g, U0, w = spec.gradient, spec.barrier_height, spec.barrier_width
    xd = spec.barrier_position
    if U0 == 0:
        return WellAnalysis(exists=False)
    if g == 0:
        # flat floor at infinity: depth is the bare barrier height
        return WellAnalysis(
            exists=True, x_localmax=xd, x_localmin=math.inf, U_max=U0, U_min=0.0,
            U_eff=U0, T_eff=effective_temperature(U0),
        )

    def dU(u):
        return float(derivative(spec, xd + u))

    lo = max(0.0, -xd)  # u at which x = 0
    # the slope minimum on x > 0 (u = w0 unless the cusp cuts it off)
    u_star = max(w, lo)
    if dU(u_star) >= 0:
        return WellAnalysis(exists=False)
    # the local max lies where the slope first turns negative
    if dU(lo + 1e-12) <= 0:
        # barrier already falls at the cusp: the cusp itself is the local max
        u_max = lo
    else:
        u_max = _bisect(dU, lo, u_star)
    hi = u_star + w
    while dU(hi) <= 0:
        hi += w
    u_min = _bisect(dU, u_star, hi)
    x_max, x_min = xd + u_max, xd + u_min
    U_max, U_min = float(evaluate(spec, x_max)), float(evaluate(spec, x_min))
    U_eff = max(U_max - U_min, 0.0)  # roundoff at the existence threshold
    curvature = float(second_derivative(spec, x_min))
    omega = math.sqrt(curvature / mass) if curvature > 0 else 0.0
    spacing = hbar * omega
    return WellAnalysis(
        exists=U_eff > 0, x_localmax=x_max, x_localmin=x_min, U_max=U_max,
        U_min=U_min, U_eff=U_eff, T_eff=effective_temperature(U_eff),
        omega=omega, E0=0.5 * spacing, level_spacing=spacing,
    )


def existence_threshold(gradient, barrier_width):
    """Smallest barrier height that opens a well: g w0 e^{1/2}."""
    return gradient * barrier_width * math.exp(0.5)


def barrier_height_for_depth(U_eff, gradient, barrier_width, tol=1e-10):
    """Invert :func:`well_analysis`: the U0 giving a requested well depth."""
    if U_eff <= 0:
        raise ValueError("U_eff must be > 0")
    if gradient == 0:
        return float(U_eff)

    def depth(U0):
        return well_analysis(PotentialSpec(gradient, U0, barrier_width)).U_eff - U_eff

    lo = existence_threshold(gradient, barrier_width)
    hi = lo + 2.0 * U_eff
    while depth(hi) < 0:
        hi *= 2.0
    return optimize.brentq(depth, lo, hi, xtol=tol)


def effective_temperature(U_eff):
    """T_eff = 2 U_eff (both in nK): the largest kinetic energy a selected atom can carry."""
    if np.any(np.asarray(U_eff) < 0):
        raise ValueError("U_eff must be >= 0")
    return 2.0 * U_eff


def critical_velocity(U_eff, mass=MASS_RB85):
    """v_c = sqrt(2 U_eff / m) in um/ms."""
    U_eff = np.asarray(U_eff, dtype=float)
    if np.any(U_eff < 0):
        raise ValueError("U_eff must be >= 0")
    return np.sqrt(2.0 * U_eff / mass)


def outer_turning_point(spec, well):
    """Outer classical turning point of the well at the energy of its rim.

    Solves U(x) = U_max for x > x_localmin.
    """
    f = lambda x: float(evaluate(spec, x)) - well.U_max
    hi = max(well.x_localmin, 0.0) + spec.barrier_width
    while f(hi) < 0:
        hi += spec.barrier_width
    return optimize.brentq(f, well.x_localmin, hi, xtol=1e-10)


def well_action(spec, well, energy, mass=MASS_RB85):
    """Phase-space action  oint p dx  (nK ms) of an orbit in the well at ``energy``.

    ``energy`` is absolute (same zero as U) and must lie in [U_min, U_max].
    """
    if energy <= well.U_min:
        return 0.0
    energy = min(energy, well.U_max)
    f = lambda x: float(evaluate(spec, x)) - energy
    left = optimize.brentq(f, well.x_localmax, well.x_localmin, xtol=1e-12) \
        if energy < well.U_max else well.x_localmax
    right = optimize.brentq(f, well.x_localmin, outer_turning_point(spec, well) + 1e-9,
                            xtol=1e-12)

    def p(x):
        return math.sqrt(max(0.0, 2.0 * mass * (energy - float(evaluate(spec, x)))))

    val, _ = integrate.quad(p, left, right, limit=200)
    return 2.0 * val


def bohr_sommerfeld_levels(spec, well, mass=MASS_RB85, hbar=HBAR):
    """Semiclassical bound levels  oint p dx = 2 pi hbar (n + 1/2)  inside the well.

    Returns the level energies measured from U_min.
    """
    if not well.exists or not math.isfinite(well.x_localmin):
        return np.array([])
    total = well_action(spec, well, well.U_max, mass)
    n_levels = int(math.floor(total / (2 * math.pi * hbar) - 0.5)) + 1
    levels = []
    for n in range(max(n_levels, 0)):
        target = 2 * math.pi * hbar * (n + 0.5)
        E = optimize.brentq(lambda E: well_action(spec, well, E, mass) - target,
                            well.U_min, well.U_max, xtol=1e-10)
        levels.append(E - well.U_min)
    return np.array(levels)
