"""Input validation helpers shared by the estimators and the IO layers."""

from __future__ import annotations

import numpy as np

from .errors import NotFittedError

ADC_MAX = 4095
N_SENSORS = 5


def check_feature_matrix(X, n_features: int | None = None) -> np.ndarray:
    """Coerce X to a 2-D float64 array and reject non-finite values."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D feature matrix, got ndim={X.ndim}")
    if not np.isfinite(X).all():
        raise ValueError("feature matrix contains NaN or infinite values")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"expected {n_features} features, got {X.shape[1]}")
    return X


def check_binary_labels(y, n_rows: int) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError("labels must be a 1-D array")
    if len(y) != n_rows:
        raise ValueError(f"got {len(y)} labels for {n_rows} rows")
    values = np.unique(y)
    if not np.isin(values, (0, 1)).all():
        raise ValueError("labels must be 0 (negative) or 1 (positive)")
    return y.astype(np.uint8)


def check_counts(counts, n: int = N_SENSORS) -> tuple[int, ...]:
    """Validate one frame's ADC readings: n integers in [0, ADC_MAX]."""
    vals = tuple(counts)
    if len(vals) != n:
        raise ValueError(f"expected {n} sensor readings, got {len(vals)}")
    out = []
    for v in vals:
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
            raise ValueError(f"sensor reading {v!r} is not an integer")
        v = int(v)
        if not 0 <= v <= ADC_MAX:
            raise ValueError(f"sensor reading {v} outside [0, {ADC_MAX}]")
        out.append(v)
    return tuple(out)


def check_probability_threshold(threshold: float) -> float:
    threshold = float(threshold)
    if not 0.0 < threshold <= 1.0:
        raise ValueError("decision threshold must be in (0, 1]")
    return threshold


def check_is_fitted(estimator, attribute: str) -> None:
    if getattr(estimator, attribute, None) is None:
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first"
        )
