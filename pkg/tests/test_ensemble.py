import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from velsel import analytic as an
from velsel import ensemble as en
from velsel import potential as pot
from velsel.units import MASS_RB85

CLOUD = an.CloudSpec(8.0, 291.47)
WELL_4P6 = pot.PotentialSpec(10.0, 97.0, 5.0)


def test_schedule_validation():
    with pytest.raises(ValueError):
        en.SweepSchedule(10.0, 5.0, 1.0, 0.01)
    with pytest.raises(ValueError):
        en.SweepSchedule(0.0, 5.0, 0.0, 0.01)
    with pytest.raises(ValueError):
        en.SweepSchedule(0.0, 5.0, 1.0, -0.01)


def test_schedule_position_saturates():
    s = en.SweepSchedule(0.0, 20.0, 2.0, 0.01, hold_time=5.0)
    assert s.sweep_time == 10.0 and s.duration == 15.0 and s.n_steps == 1500
    np.testing.assert_allclose(s.position([0.0, 5.0, 10.0, 14.0]), [0.0, 10.0, 20.0, 20.0])


def test_sampling_is_prefix_stable():
    a = en.sample_cloud(CLOUD, 10000, 7)
    b = en.sample_cloud(CLOUD, 5000, 7)
    np.testing.assert_array_equal(a[:5000], b)
    np.testing.assert_array_equal(en.sample_block(CLOUD, 7, 4000, 9000), a[4000:9000])
    assert not np.array_equal(a, en.sample_cloud(CLOUD, 10000, 8))


def test_sampling_moments():
    p = en.sample_cloud(CLOUD, 200_000, 3)
    n = len(p)
    assert abs(p[:, 0].mean()) < 5 * CLOUD.r0 / math.sqrt(n)
    assert p[:, 0].std() == pytest.approx(CLOUD.r0, rel=5 / math.sqrt(2 * n))
    assert p[:, 1].std() == pytest.approx(CLOUD.v0, rel=5 / math.sqrt(2 * n))


@pytest.mark.parametrize("bad", [np.zeros((3, 3)), np.array([[0.0, np.nan]]), np.zeros(4)])
def test_particle_validation(bad):
    with pytest.raises(ValueError):
        en.check_particles(bad)


@settings(max_examples=6, deadline=None)
@given(st.floats(5, 40), st.floats(50, 5000), st.floats(0.5, 50), st.floats(1.5, 40))
def test_quasistatic_matches_quadrature(r0, T0, g, ratio):
    cloud = an.CloudSpec(r0, T0)
    U0 = ratio * pot.existence_threshold(g, 5.0)
    spec = pot.PotentialSpec(g, U0, 5.0)
    well = pot.well_analysis(spec)
    res = en.select_quasistatic(en.sample_cloud(cloud, 40_000, 11), spec, well)
    eta = an.eta_full(well.U_eff, cloud, g)
    sigma = math.sqrt(max(eta * (1 - eta), 1e-12) / res.n_total)
    assert abs(res.eta - eta) < 5 * sigma + 1e-4


def test_quasistatic_without_well_selects_nothing():
    spec = pot.PotentialSpec(10.0, 50.0, 5.0)
    res = en.select_quasistatic(en.sample_cloud(CLOUD, 1000, 1), spec, pot.well_analysis(spec))
    assert res.eta == 0.0 and res.warning


def test_stderr_is_binomial():
    spec = pot.PotentialSpec(10.0, 300.0, 5.0)
    res = en.select_quasistatic(en.sample_cloud(CLOUD, 5000, 1), spec, pot.well_analysis(spec))
    assert res.stderr == pytest.approx(math.sqrt(res.eta * (1 - res.eta) / 5000))


def test_verlet_conserves_energy_in_static_well():
    spec = WELL_4P6.at(20.0)
    well = pot.well_analysis(spec)
    x = np.linspace(well.x_localmax + 0.5, pot.outer_turning_point(spec, well) - 0.5, 8)
    p = np.column_stack([x, np.zeros_like(x)])
    period = 2 * math.pi / well.omega
    end = en.static_run(p, spec, period / 400, 20 * period)
    e0 = en.total_energy(spec, p)
    e1 = en.total_energy(spec, end)
    assert np.max(np.abs(e1 - e0)) < 1e-3 * well.U_eff


def test_verlet_second_order():
    spec = WELL_4P6.at(20.0)
    well = pot.well_analysis(spec)
    p = np.array([[well.x_localmin + 1.0, 0.0]])
    period = 2 * math.pi / well.omega
    ref = en.static_run(p, spec, period / 6400, period)
    errs = [abs(en.static_run(p, spec, period / n, period)[0, 0] - ref[0, 0])
            for n in (100, 200)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_verlet_free_fall_in_linear_trap():
    # no barrier: x(t) = x0 - g t^2 / 2m on the x > 0 side, exact for Verlet
    spec = pot.PotentialSpec(10.0, 0.0, 5.0)
    p = np.array([[100.0, 0.0]])
    end = en.static_run(p, spec, 0.01, 1.0)
    assert end[0, 0] == pytest.approx(100.0 - 0.5 * spec.gradient / MASS_RB85, rel=1e-12)
    assert end[0, 1] == pytest.approx(-spec.gradient / MASS_RB85, rel=1e-12)


def test_default_schedule():
    s = en.default_schedule(CLOUD, WELL_4P6, x_end=20.0)
    well = pot.well_analysis(WELL_4P6.at(20.0))
    assert s.speed == pytest.approx(0.1 * float(pot.critical_velocity(well.U_eff)))
    assert s.hold_time == pytest.approx(5 * 2 * math.pi / well.omega)
    assert s.dt <= 2 * math.pi / well.omega / 400
    assert en.default_schedule(CLOUD, WELL_4P6).x_end == pytest.approx(20.0)


def test_drift_self_test_rejects_coarse_step():
    s = en.SweepSchedule(0.0, 20.0, 0.1, 2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(en.NumericalError):
            en.drift_self_test(en.sample_cloud(CLOUD, 64, 1), WELL_4P6, s)


def test_coarse_step_warns():
    s = en.SweepSchedule(0.0, 20.0, 0.1, 0.5)
    with pytest.warns(RuntimeWarning):
        en.check_step(WELL_4P6, s)


def test_sweep_selects_into_final_well():
    p = en.sample_cloud(CLOUD, 4000, 5)
    s = en.default_schedule(CLOUD, WELL_4P6, x_end=20.0, hold_periods=2.0)
    res = en.simulate_sweep(p, WELL_4P6, s)
    well = pot.well_analysis(WELL_4P6.at(20.0))
    sel = res.final[res.mask]
    assert len(sel) > 0
    assert np.all(sel[:, 0] > well.x_localmax)
    assert res.max_selected_energy < well.U_eff
    # bound atoms lie inside the classically allowed window
    assert np.all(sel[:, 0] < pot.outer_turning_point(WELL_4P6.at(20.0), well))


def test_sweep_is_deterministic():
    p = en.sample_cloud(CLOUD, 500, 5)
    s = en.default_schedule(CLOUD, WELL_4P6, x_end=20.0, hold_periods=1.0)
    a = en.simulate_sweep(p, WELL_4P6, s)
    b = en.simulate_sweep(p, WELL_4P6, s)
    np.testing.assert_array_equal(a.final, b.final)


def test_sweep_without_well():
    spec = pot.PotentialSpec(10.0, 50.0, 5.0)
    s = en.SweepSchedule(0.0, 20.0, 1.0, 0.01)
    res = en.simulate_sweep(en.sample_cloud(CLOUD, 200, 1), spec, s)
    assert res.eta == 0.0


def test_curve_is_ordered_and_worker_independent():
    U0 = [120.0, 90.0, 100.0]
    a = en.efficiency_curve_classical(CLOUD, 10.0, 5.0, U0, n=5000, seed=2, x_end=20.0)
    assert [r.U0 for r in a] == [90.0, 100.0, 120.0]
    b = en.efficiency_curve_classical(CLOUD, 10.0, 5.0, U0, n=5000, seed=2, workers=2,
                                      x_end=20.0)
    assert [r.eta for r in a] == [r.eta for r in b]
