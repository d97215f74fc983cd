import json
import math

import pytest

from velsel.config import ConfigError, parse_config
from velsel.units import temperature_from_packet_width

MINIMAL = """\
# analytic point
engine = analytic
r0 = 25 um
T0 = 50 uK
gradient = 0.5 G/cm
U0 = 302.5566 nK
w0 = 5 um
"""


def test_minimal_config():
    cfg = parse_config(MINIMAL)
    assert cfg.engine == "analytic"
    assert cfg.T0 == 50000.0 and cfg.U0 == [302.5566]
    assert cfg.gradient == pytest.approx(3.35857, rel=1e-5)
    assert cfg.x_end is None and cfg.speed is None


def test_echo_is_normalized():
    echo = parse_config(MINIMAL).echo()
    line = next(l for l in echo if l.startswith("gradient"))
    value = float(line.split("=")[1].split()[0])
    assert value == pytest.approx(3.3586, abs=1e-4)
    assert line.endswith("nK/um")
    assert "T0 = 50000.0 nK" in echo
    assert "x_end = auto" in echo


def test_echo_round_trips():
    cfg = parse_config(MINIMAL)
    again = parse_config("\n".join(cfg.echo()))
    assert again.to_dict() == cfg.to_dict()


def test_list_and_x0():
    cfg = parse_config(MINIMAL.replace("T0 = 50 uK", "x0 = 0.07 um")
                       .replace("302.5566 nK", "97 nK, 107 nK"))
    assert cfg.U0 == [97.0, 107.0]
    assert cfg.T0 == pytest.approx(float(temperature_from_packet_width(0.07)))


@pytest.mark.parametrize("edit, key, line", [
    (("w0 = 5 um", "w0 = -5 um"), "w0", 7),
    (("w0 = 5 um", "w0 = 5"), "w0", 7),                   # missing suffix
    (("r0 = 25 um", "r0 = 25 nK"), "r0", 3),              # wrong dimension
    (("w0 = 5 um", "w0 = 5 um\nspeed_up = 3"), "speed_up", 8),
    (("engine = analytic", "engine = magic"), "engine", 2),
    (("U0 = 302.5566 nK", "U0 = -1 nK"), "U0", 6),
    (("w0 = 5 um", "w0 = 5 um\nn_points = 1000"), "n_points", 8),
    (("w0 = 5 um", "w0 = 5 um\nw0 = 6 um"), "w0", 8),
])
def test_errors_name_key_and_line(edit, key, line):
    with pytest.raises(ConfigError) as err:
        parse_config(MINIMAL.replace(*edit))
    assert err.value.key == key
    assert err.value.line == line
    assert key in str(err.value) and f"line {line}" in str(err.value)


def test_missing_key():
    with pytest.raises(ConfigError, match="w0"):
        parse_config(MINIMAL.replace("w0 = 5 um\n", ""))


@pytest.mark.parametrize("text", [MINIMAL.replace("T0 = 50 uK\n", ""),
                                  MINIMAL + "x0 = 0.07 um\n"])
def test_exactly_one_of_T0_x0(text):
    with pytest.raises(ConfigError, match="T0"):
        parse_config(text)


def test_x_end_after_start():
    with pytest.raises(ConfigError, match="x_end"):
        parse_config(MINIMAL + "x_start = 10 um\nx_end = 5 um\n")


def test_json_front_end_matches():
    data = {"engine": "analytic", "r0": "25 um", "T0": "50 uK", "gradient": "0.5 G/cm",
            "U0": ["302.5566 nK"], "w0": "5 um", "seed": 3}
    cfg = parse_config(json.dumps(data))
    ref = parse_config(MINIMAL + "seed = 3\n")
    assert cfg.to_dict() == ref.to_dict()


def test_json_errors_name_key():
    with pytest.raises(ConfigError, match="w0"):
        parse_config(json.dumps({"engine": "analytic", "r0": "1 um", "T0": "1 nK",
                                 "gradient": "1 nK/um", "U0": "1 nK", "w0": "-1 um"}))


def test_auto_values():
    cfg = parse_config(MINIMAL + "speed = auto\ndt = auto\nx_end = 40 um\n")
    assert cfg.speed is None and cfg.dt is None and cfg.x_end == 40.0
    assert math.isnan(cfg.x0)


def test_moment_factor_scales_gauss_gradients_only():
    half = parse_config(MINIMAL + "moment_factor = 0.5\n")
    assert half.gradient == pytest.approx(0.5 * parse_config(MINIMAL).gradient, rel=1e-12)
    internal = MINIMAL.replace("0.5 G/cm", "3 nK/um") + "moment_factor = 0.5\n"
    assert parse_config(internal).gradient == 3.0
