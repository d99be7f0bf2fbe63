"""Prior-generation comparator: per-sensor linear calibration plus a fixed alarm.

This is the simple algorithm the forest is measured against. fit() runs an
independent least-squares line per sensor mapping ADC counts to pressure;
predict() alarms when the mean of the five estimated pressures reaches the
threshold (mode "mean", the default), or when any single estimate does
(mode "any", exposed for comparison but not used in the standard study).
"""

from __future__ import annotations

import numpy as np

from .dataset import ACS_THRESHOLD_MMHG
from .errors import DegenerateDataError
from .validation import check_feature_matrix, check_is_fitted

_MODES = ("mean", "any")


class AverageBaseline:
    """Mean-of-calibrated-sensors alarm with the estimator surface."""

    _PARAMS = ("alarm_mmhg", "mode")

    def __init__(self, alarm_mmhg: float = ACS_THRESHOLD_MMHG, mode: str = "mean"):
        self.alarm_mmhg = alarm_mmhg
        self.mode = mode
        self.slope_ = None
        self.intercept_ = None

    def __repr__(self) -> str:
        return f"AverageBaseline(alarm_mmhg={self.alarm_mmhg!r}, mode={self.mode!r})"

    def get_params(self, deep: bool = True) -> dict:
        return {k: getattr(self, k) for k in self._PARAMS}

    def set_params(self, **params) -> "AverageBaseline":
        for k, v in params.items():
            if k not in self._PARAMS:
                raise ValueError(f"unknown parameter {k!r}")
            setattr(self, k, v)
        return self

    def fit(self, X, pressures) -> "AverageBaseline":
        """Least-squares pressure-vs-counts line per sensor column."""
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")
        X = check_feature_matrix(X)
        y = np.asarray(pressures, dtype=np.float64)
        if y.ndim != 1 or len(y) != len(X):
            raise ValueError("pressures must be 1-D and match X")
        if len(X) < 2:
            raise DegenerateDataError("calibration needs at least two rows")
        slopes = np.empty(X.shape[1])
        intercepts = np.empty(X.shape[1])
        ybar = y.mean()
        for j in range(X.shape[1]):
            col = X[:, j]
            xbar = col.mean()
            var = float(((col - xbar) ** 2).sum())
            if var == 0.0:
                raise DegenerateDataError(
                    f"sensor {j} readings are constant; cannot calibrate"
                )
            slope = float(((col - xbar) * (y - ybar)).sum()) / var
            if slope <= 0.0:
                raise DegenerateDataError(
                    f"sensor {j} calibration slope is not positive"
                )
            slopes[j] = slope
            intercepts[j] = ybar - slope * xbar
        self.slope_ = slopes
        self.intercept_ = intercepts
        return self

    def estimate_pressure(self, X) -> np.ndarray:
        """Per-sensor pressure estimates, shape (n, 5)."""
        check_is_fitted(self, "slope_")
        X = check_feature_matrix(X, len(self.slope_))
        return X * self.slope_ + self.intercept_

    def predict(self, X) -> np.ndarray:
        est = self.estimate_pressure(X)
        if self.mode == "any":
            alarm = (est >= self.alarm_mmhg).any(axis=1)
        else:
            alarm = est.mean(axis=1) >= self.alarm_mmhg
        return alarm.astype(np.uint8)
