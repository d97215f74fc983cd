import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from velsel import analytic as an
from velsel import ensemble as en
from velsel.estimators import EfficiencyCurve, QuasiStaticSelector, SweepSelector

CLOUD = an.CloudSpec(8.0, 291.47)


@pytest.fixture(scope="module")
def X():
    return en.sample_cloud(CLOUD, 20000, 0)


def test_get_params_and_clone():
    est = QuasiStaticSelector(gradient=3.0, barrier_height=50.0)
    assert est.get_params()["gradient"] == 3.0
    assert clone(est).get_params() == est.get_params()
    est.set_params(barrier_height=60.0)
    assert est.barrier_height == 60.0


def test_quasistatic_selector_score_matches_quadrature(X):
    est = QuasiStaticSelector(10.0, 300.0, 5.0).fit(X)
    eta = an.eta_full(est.well_.U_eff, CLOUD, 10.0)
    assert est.score(X) == pytest.approx(eta, abs=3 * np.sqrt(eta / len(X)))
    mask = est.predict(X)
    assert mask.dtype == bool and mask.shape == (len(X),)


def test_unfitted_raises(X):
    with pytest.raises(NotFittedError):
        QuasiStaticSelector().predict(X)


@pytest.mark.parametrize("bad", [np.zeros((5, 3)), np.array([[np.inf, 0.0]])])
def test_input_validation(bad):
    with pytest.raises(ValueError):
        QuasiStaticSelector().fit(bad)


def test_bad_parameter_rejected_at_fit(X):
    with pytest.raises(ValueError):
        QuasiStaticSelector(barrier_width=-1.0).fit(X)


def test_sweep_selector(X):
    est = SweepSelector(10.0, 97.0, 5.0, x_end=20.0, hold_periods=1.0).fit(X[:2000])
    assert est.cloud_.r0 == pytest.approx(8.0, rel=0.05)
    assert est.schedule_.x_end == 20.0
    mask = est.predict(X[:2000])
    assert 0 < mask.sum() < 200


def test_efficiency_curve_transform():
    tr = EfficiencyCurve(r0=25.0, T0=50000.0, gradient=3.3585690735661275)
    out = tr.fit_transform(np.array([[0.0], [302.5566]]))
    assert out.shape == (2, 3)
    assert out[0].tolist() == [0.0, 0.0, 0.0]
    assert out[1, 0] == pytest.approx(250.0, abs=1e-3)
    assert out[1, 2] == pytest.approx(0.03365, abs=1e-5)
    assert list(tr.get_feature_names_out()) == ["U_eff_nK", "T_eff_nK", "eta"]


def test_efficiency_curve_models():
    U0 = np.array([302.5566])
    vals = {m: EfficiencyCurve(25.0, 50000.0, 3.3585690735661275, model=m).fit().transform(U0)[0, 2]
            for m in EfficiencyCurve._MODELS}
    assert vals["ke_lowbarrier"] == pytest.approx(0.0798, abs=1e-4)
    assert vals["full"] < vals["ke"]
    with pytest.raises(ValueError):
        EfficiencyCurve(model="nope").fit()
