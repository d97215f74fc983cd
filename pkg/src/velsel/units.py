"""Internal unit system and physical constants.

Every module works in

    length      um
    time        ms
    velocity    um/ms  (= mm/s)
    energy      nK     (E / k_B, so k_B is absorbed into the energy unit)

Conversions from laboratory units (G/cm, uK, Hz, ...) happen only at the
boundary, i.e. when a config file is read or a report is written.

Source-of-truth constant table (CODATA 2022, via scipy.constants):

    =====================  =======================  ======================
    symbol                 value                    unit
    =====================  =======================  ======================
    HBAR  (hbar / k_B)     7.638232582              nK ms
    MU_B  (mu_B / k_B)     67171.38147              nK / G
    MASS_RB85 (m / k_B)    10.21254093              nK ms^2 / um^2
    =====================  =======================  ======================
"""
from __future__ import annotations

import math
import re

import numpy as np
from scipy import constants as _c

# SI -> internal scale factors
_NK = 1e9            # K -> nK
_MS = 1e3            # s -> ms
_UM = 1e6            # m -> um
_G_PER_T = 1e4

HBAR = _c.hbar / _c.k * _NK * _MS
MU_B = _c.physical_constants["Bohr magneton"][0] / _c.k * _NK / _G_PER_T
RB85_MASS_U = 84.911789738
MASS_RB85 = RB85_MASS_U * _c.atomic_mass / _c.k * _NK * _MS**2 / _UM**2


class UnitError(ValueError):
    """Raised for out-of-domain inputs or unknown unit suffixes."""


def _check_nonneg(name, value):
    if not np.all(np.asarray(value) >= 0):
        raise UnitError(f"{name} must be >= 0, got {value!r}")


def gradient_to_internal(bprime_g_per_cm, moment=MU_B):
    """Convert a magnetic gradient in G/cm to a potential slope in nK/um.

    ``moment`` is the magnetic moment over k_B in nK/G (Bohr magneton by
    default).
    """
    _check_nonneg("Bprime", bprime_g_per_cm)
    return moment * np.asarray(bprime_g_per_cm, dtype=float) * 1e-4


def gradient_from_internal(g_nk_per_um, moment=MU_B):
    _check_nonneg("gradient", g_nk_per_um)
    return np.asarray(g_nk_per_um, dtype=float) / (moment * 1e-4)


def velocity_from_temperature(T0, mass=MASS_RB85):
    """rms velocity v0 = sqrt(k_B T0 / m) in um/ms for a temperature in nK."""
    _check_nonneg("T0", T0)
    return np.sqrt(np.asarray(T0, dtype=float) / mass)


def temperature_from_velocity(v0, mass=MASS_RB85):
    """Inverse of :func:`velocity_from_temperature`: T0 = m v0^2 / k_B."""
    _check_nonneg("v0", v0)
    return mass * np.asarray(v0, dtype=float) ** 2


def temperature_from_packet_width(x0, mass=MASS_RB85, hbar=HBAR):
    """Temperature (nK) of a minimum-uncertainty packet with rms width x0 (um).

    The packet has rms momentum hbar / (2 x0), so v0 = hbar / (2 m x0) and
    T0 = m v0^2.
    """
    x0 = np.asarray(x0, dtype=float)
    if not np.all(x0 > 0):
        raise UnitError(f"x0 must be > 0, got {x0!r}")
    v0 = hbar / (2.0 * mass * x0)
    return mass * v0**2


def packet_width_from_temperature(T0, mass=MASS_RB85, hbar=HBAR):
    T0 = np.asarray(T0, dtype=float)
    if not np.all(T0 > 0):
        raise UnitError(f"T0 must be > 0, got {T0!r}")
    return hbar / (2.0 * np.sqrt(mass * T0))


def angular_frequency_to_hz(omega):
    """rad/ms -> Hz."""
    return np.asarray(omega, dtype=float) * 1e3 / (2 * math.pi)


# Boundary conversions for config ingestion.  Each entry maps a unit suffix
# (lower-cased, whitespace removed) to (dimension, factor to internal units).
_SUFFIXES = {
    # length
    "um": ("length", 1.0), "µm": ("length", 1.0), "μm": ("length", 1.0),
    "mm": ("length", 1e3), "cm": ("length", 1e4), "nm": ("length", 1e-3),
    "m": ("length", 1e6),
    # time
    "ms": ("time", 1.0), "s": ("time", 1e3), "us": ("time", 1e-3),
    "µs": ("time", 1e-3), "μs": ("time", 1e-3),
    # energy / temperature
    "nk": ("energy", 1.0), "uk": ("energy", 1e3), "µk": ("energy", 1e3),
    "μk": ("energy", 1e3), "mk": ("energy", 1e6), "k": ("energy", 1e9),
    # velocity
    "um/ms": ("velocity", 1.0), "mm/s": ("velocity", 1.0),
    "m/s": ("velocity", 1e3), "cm/s": ("velocity", 10.0),
    # potential gradient
    "nk/um": ("gradient", 1.0), "nk/µm": ("gradient", 1.0),
    "nk/μm": ("gradient", 1.0), "uk/um": ("gradient", 1e3),
    "g/cm": ("gradient", None),  # needs the magnetic moment, see below
    # frequency
    "hz": ("frequency", 2 * math.pi * 1e-3), "khz": ("frequency", 2 * math.pi),
    "rad/ms": ("frequency", 1.0),
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S.*?)?\s*$")


def parse_quantity(text, dimension, moment=MU_B):
    """Parse ``"0.5 G/cm"`` style text into a float in internal units.

    The unit suffix is mandatory and must belong to ``dimension``.
    """
    m = _QUANTITY.match(text)
    if not m:
        raise UnitError(f"cannot parse quantity {text!r}")
    number, suffix = float(m.group(1)), m.group(2)
    if suffix is None:
        raise UnitError(f"missing unit suffix in {text!r} (expected {dimension})")
    key = suffix.replace(" ", "").lower()
    if key not in _SUFFIXES:
        raise UnitError(f"unknown unit {suffix!r} in {text!r}")
    dim, factor = _SUFFIXES[key]
    if dim != dimension:
        raise UnitError(f"unit {suffix!r} is a {dim}, expected {dimension}")
    if key == "g/cm":
        if number < 0:
            raise UnitError(f"gradient must be >= 0, got {text!r}")
        return float(gradient_to_internal(number, moment))
    return number * factor
