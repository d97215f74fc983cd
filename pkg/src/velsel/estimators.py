"""scikit-learn style front-end.

Phase-space samples are rows [x, v] (um, um/ms).  The selectors "fit" by
resolving the well and, for the sweep, the schedule from the sample's own
width and temperature; ``predict`` returns the selection mask and
``score`` the efficiency.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import analytic as an
from . import ensemble as en
from . import potential as pot
from ._validation import check_column, check_phase_space, check_scalar
from .units import MASS_RB85


class _SelectorBase(BaseEstimator):
    def _base_spec(self):
        return pot.PotentialSpec(
            check_scalar(self.gradient, "gradient", 0.0),
            check_scalar(self.barrier_height, "barrier_height", 0.0),
            check_scalar(self.barrier_width, "barrier_width", 0.0, strict=True),
        )

    def score(self, X, y=None):
        """Selection efficiency eta on X."""
        return float(np.mean(self.predict(X)))


class QuasiStaticSelector(_SelectorBase):
    """Slow-sweep limit: keep x > x_start with g|x| + m v^2/2 < U_eff."""

    def __init__(self, gradient=10.0, barrier_height=97.0, barrier_width=5.0, x_start=0.0,
                 mass=MASS_RB85):
        self.gradient = gradient
        self.barrier_height = barrier_height
        self.barrier_width = barrier_width
        self.x_start = x_start
        self.mass = mass

    def fit(self, X, y=None):
        X = check_phase_space(X)
        self.n_features_in_ = X.shape[1]
        self.spec_ = self._base_spec()
        self.well_ = pot.well_analysis(self.spec_, self.mass)
        return self

    def predict(self, X):
        check_is_fitted(self, "well_")
        X = check_phase_space(X)
        if not self.well_.exists:
            return np.zeros(len(X), dtype=bool)
        return en.select_quasistatic(X, self.spec_, self.well_, self.x_start, self.mass).mask


class SweepSelector(_SelectorBase):
    """Integrate the barrier sweep; None fields are filled by ``default_schedule``
    using r0 and T0 measured from the training sample."""

    def __init__(self, gradient=10.0, barrier_height=97.0, barrier_width=5.0, x_start=0.0,
                 x_end=None, speed=None, dt=None, hold_periods=5.0, mass=MASS_RB85):
        self.gradient = gradient
        self.barrier_height = barrier_height
        self.barrier_width = barrier_width
        self.x_start = x_start
        self.x_end = x_end
        self.speed = speed
        self.dt = dt
        self.hold_periods = hold_periods
        self.mass = mass

    def fit(self, X, y=None):
        X = check_phase_space(X)
        self.n_features_in_ = X.shape[1]
        self.spec_ = self._base_spec()
        r0 = float(np.std(X[:, 0])) or 1.0
        T0 = float(self.mass * np.mean(X[:, 1] ** 2)) or 1.0
        self.cloud_ = an.CloudSpec(r0, T0, self.mass)
        self.schedule_ = en.default_schedule(
            self.cloud_, self.spec_, self.x_start, self.x_end,
            check_scalar(self.speed, "speed", 0.0, strict=True, allow_none=True),
            check_scalar(self.dt, "dt", 0.0, strict=True, allow_none=True),
            self.hold_periods, self.mass)
        return self

    def predict(self, X):
        check_is_fitted(self, "schedule_")
        X = check_phase_space(X)
        return en.simulate_sweep(X, self.spec_, self.schedule_, self.mass).mask


class EfficiencyCurve(TransformerMixin, BaseEstimator):
    """Map barrier heights U0 to [U_eff, T_eff, eta] with the analytic model.

    ``model`` is one of "full", "ke", "ke_lowbarrier", "pe", "lowbarrier".
    """

    _MODELS = ("full", "ke", "ke_lowbarrier", "pe", "lowbarrier")

    def __init__(self, r0=8.0, T0=291.47, gradient=10.0, barrier_width=5.0, model="full",
                 mass=MASS_RB85):
        self.r0 = r0
        self.T0 = T0
        self.gradient = gradient
        self.barrier_width = barrier_width
        self.model = model
        self.mass = mass

    def fit(self, X=None, y=None):
        if self.model not in self._MODELS:
            raise ValueError(f"model must be one of {self._MODELS}, got {self.model!r}")
        self.cloud_ = an.CloudSpec(check_scalar(self.r0, "r0", 0.0, strict=True),
                                   check_scalar(self.T0, "T0", 0.0, strict=True), self.mass)
        check_scalar(self.gradient, "gradient", 0.0)
        check_scalar(self.barrier_width, "barrier_width", 0.0, strict=True)
        self.n_features_in_ = 1
        return self

    def _eta(self, U_eff):
        T_eff, g, c = 2.0 * U_eff, self.gradient, self.cloud_
        if U_eff <= 0:
            return 0.0
        if self.model == "full":
            return an.eta_full(U_eff, c, g)
        if self.model == "ke":
            return an.eta_ke(T_eff, c.T0)
        if self.model == "ke_lowbarrier":
            return an.eta_ke_lowbarrier(T_eff, c.T0)
        if self.model == "pe":
            return an.eta_pe(T_eff, c, g)
        return an.eta_lowbarrier_combined(T_eff, c, g)

    def transform(self, X):
        check_is_fitted(self, "cloud_")
        U0 = check_column(X, "U0")
        out = np.empty((len(U0), 3))
        for i, h in enumerate(U0):
            well = pot.well_analysis(pot.PotentialSpec(self.gradient, max(h, 0.0),
                                                       self.barrier_width), self.mass)
            U_eff = well.U_eff if well.exists else 0.0
            out[i] = (U_eff, 2.0 * U_eff, self._eta(U_eff))
        return out

    def get_feature_names_out(self, input_features=None):
        return np.array(["U_eff_nK", "T_eff_nK", "eta"], dtype=object)
