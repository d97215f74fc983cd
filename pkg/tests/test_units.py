import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from velsel import units as un

# CODATA 2022 literals, independent of scipy.constants
HBAR_SI = 6.62607015e-34 / (2 * math.pi)
KB_SI = 1.380649e-23
MU_B_SI = 9.2740100657e-24
AMU_SI = 1.66053906892e-27


def test_constant_table():
    assert un.HBAR == pytest.approx(HBAR_SI / KB_SI * 1e12, rel=1e-12)
    assert un.MU_B == pytest.approx(MU_B_SI / KB_SI * 1e9 * 1e-4, rel=1e-12)
    m = 84.911789738 * AMU_SI / KB_SI * 1e9 * 1e6 / 1e12
    assert un.MASS_RB85 == pytest.approx(m, rel=1e-10)
    assert un.HBAR == pytest.approx(7.638232582, rel=1e-9)


@pytest.mark.parametrize("bprime, expected", [(0.5, 3.35857), (100.0, 671.714), (0.0, 0.0)])
def test_gradient_conversion(bprime, expected):
    assert un.gradient_to_internal(bprime) == pytest.approx(expected, rel=1e-5, abs=1e-12)


def test_gradient_negative_rejected():
    with pytest.raises(un.UnitError):
        un.gradient_to_internal(-1.0)


@given(st.floats(min_value=0.0, max_value=1e4, allow_nan=False))
def test_gradient_round_trip(b):
    assert un.gradient_from_internal(un.gradient_to_internal(b)) == pytest.approx(b, rel=1e-12,
                                                                                  abs=1e-12)


@given(st.floats(min_value=1e-3, max_value=1e7))
def test_temperature_velocity_round_trip(T):
    v = un.velocity_from_temperature(T)
    assert un.temperature_from_velocity(v) == pytest.approx(T, rel=1e-12)


def test_packet_width_anchor():
    # 0.07 um packet -> about 292 nK
    assert un.temperature_from_packet_width(0.07) == pytest.approx(291.47, abs=0.05)
    v0 = un.velocity_from_temperature(un.temperature_from_packet_width(0.07))
    assert v0 == pytest.approx(un.HBAR / (2 * un.MASS_RB85 * 0.07), rel=1e-12)


@given(st.floats(min_value=1e-3, max_value=10.0))
def test_packet_width_round_trip(x0):
    T = un.temperature_from_packet_width(x0)
    assert un.packet_width_from_temperature(T) == pytest.approx(x0, rel=1e-12)


@pytest.mark.parametrize("bad", [0.0, -0.1])
def test_packet_width_domain(bad):
    with pytest.raises(un.UnitError):
        un.temperature_from_packet_width(bad)


def test_negative_temperature_rejected():
    with pytest.raises(un.UnitError):
        un.velocity_from_temperature(-1.0)


@pytest.mark.parametrize("text, dim, value", [
    ("292 nK", "energy", 292.0),
    ("50 uK", "energy", 50000.0),
    ("5 um", "length", 5.0),
    ("0.02 mm", "length", 20.0),
    ("1 s", "time", 1000.0),
    ("2 mm/s", "velocity", 2.0),
    ("10 nK/um", "gradient", 10.0),
    ("60 Hz", "frequency", 2 * math.pi * 0.06),
    ("1e-1ms", "time", 0.1),
])
def test_parse_quantity(text, dim, value):
    assert un.parse_quantity(text, dim) == pytest.approx(value, rel=1e-12)


def test_parse_gauss_per_cm():
    assert un.parse_quantity("0.5 G/cm", "gradient") == pytest.approx(3.35857, rel=1e-5)


@pytest.mark.parametrize("text, dim", [
    ("292", "energy"),        # missing suffix
    ("5 furlong", "length"),
    ("5 um", "energy"),       # wrong dimension
    ("abc", "length"),
    ("-1 G/cm", "gradient"),
])
def test_parse_quantity_errors(text, dim):
    with pytest.raises(un.UnitError):
        un.parse_quantity(text, dim)


def test_angular_frequency_to_hz():
    assert un.angular_frequency_to_hz(2 * math.pi * 0.06) == pytest.approx(60.0)
    np.testing.assert_allclose(un.angular_frequency_to_hz(np.array([0.0])), [0.0])
