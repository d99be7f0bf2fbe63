"""Evaluation: splits, confusion matrices, the five report metrics, ROC.

Metric conventions: positive means the pressure condition is present. Any
metric whose denominator is zero is reported as 0.0 and listed in the
Metrics.undefined tuple; f1 is the harmonic mean of the reported precision
and sensitivity values. Reports travel as CSV with a metric,value,flag
header so runs can be diffed and compared mechanically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import DataError, DegenerateDataError
from .rng import SplitMix64

METRIC_NAMES = ("accuracy", "precision", "sensitivity", "specificity", "f1")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "tn", "fp", "fn"):
            if getattr(self, name) < 0:
                raise ValueError("confusion matrix cells cannot be negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion_matrix(labels, predictions) -> ConfusionMatrix:
    labels = np.asarray(labels)
    predictions = np.asarray(predictions)
    if labels.shape != predictions.shape or labels.ndim != 1:
        raise ValueError("labels and predictions must be 1-D and equal length")
    if len(labels) == 0:
        raise DataError("cannot tabulate an empty evaluation")
    for arr in (labels, predictions):
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("labels and predictions must be 0 or 1")
    tp = int(((labels == 1) & (predictions == 1)).sum())
    tn = int(((labels == 0) & (predictions == 0)).sum())
    fp = int(((labels == 0) & (predictions == 1)).sum())
    fn = int(((labels == 1) & (predictions == 0)).sum())
    return ConfusionMatrix(tp=tp, tn=tn, fp=fp, fn=fn)


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    sensitivity: float
    specificity: float
    f1: float
    undefined: tuple[str, ...] = ()

    def value(self, name: str) -> float:
        if name not in METRIC_NAMES:
            raise ValueError(f"unknown metric {name!r}")
        return getattr(self, name)


def compute_metrics(cm: ConfusionMatrix) -> Metrics:
    """The five report metrics; zero-denominator metrics report 0 and a flag."""
    if cm.total == 0:
        raise DataError("confusion matrix is empty")
    undefined = []

    def ratio(num: int, den: int, name: str) -> float:
        if den == 0:
            undefined.append(name)
            return 0.0
        return num / den

    accuracy = ratio(cm.tp + cm.tn, cm.total, "accuracy")
    precision = ratio(cm.tp, cm.tp + cm.fp, "precision")
    sensitivity = ratio(cm.tp, cm.tp + cm.fn, "sensitivity")
    specificity = ratio(cm.tn, cm.tn + cm.fp, "specificity")
    if precision + sensitivity > 0:
        f1 = 2.0 * precision * sensitivity / (precision + sensitivity)
    else:
        undefined.append("f1")
        f1 = 0.0
    return Metrics(
        accuracy=accuracy,
        precision=precision,
        sensitivity=sensitivity,
        specificity=specificity,
        f1=f1,
        undefined=tuple(undefined),
    )


@dataclass(frozen=True)
class RocCurve:
    thresholds: tuple[float, ...]
    points: tuple[tuple[float, float], ...]  # (fpr, tpr)
    auc: float


def roc_points(scores, labels) -> RocCurve:
    """ROC sweep over the distinct scores, descending, plus the (0,0) anchor.

    A frame is predicted positive when its score >= threshold, matching the
    classifier's inclusive rule. The last point is always (1,1) because the
    lowest score admits everything. AUC is the trapezoidal integral.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be 1-D and equal length")
    if not np.isfinite(scores).all():
        raise ValueError("scores must be finite")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise DegenerateDataError("ROC needs both classes present")

    thresholds = [math.inf]
    points = [(0.0, 0.0)]
    for thr in np.unique(scores)[::-1]:
        pred = scores >= thr
        tp = int((pred & (labels == 1)).sum())
        fp = int((pred & (labels == 0)).sum())
        thresholds.append(float(thr))
        points.append((fp / n_neg, tp / n_pos))

    auc = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2.0
    return RocCurve(thresholds=tuple(thresholds), points=tuple(points), auc=auc)


def is_significant_difference(a: float, b: float, rel: float = 0.10) -> bool:
    """Ten-percent error-bar rule: significant iff the intervals are disjoint.

    Each reported value m carries the interval [m*(1-rel), m*(1+rel)]; the
    difference is called significant only when the intervals do not touch.
    """
    if rel <= 0:
        raise ValueError("rel must be positive")
    for v in (a, b):
        if not 0.0 <= v <= 1.0:
            raise ValueError("metric values must be in [0, 1]")
    lo_a, hi_a = a * (1 - rel), a * (1 + rel)
    lo_b, hi_b = b * (1 - rel), b * (1 + rel)
    return hi_a < lo_b or hi_b < lo_a


def train_test_split(
    dataset: Dataset,
    test_fraction: float = 0.2,
    seed: int = 0,
    stratified: bool = True,
) -> tuple[Dataset, Dataset]:
    """Seeded exact partition into train and test.

    Stratified mode shuffles each class separately (negatives first) and
    moves round(class_size * test_fraction) rows to the test side, so 480
    balanced rows at 0.2 give exactly 96 test and 384 train. Row order within
    each side follows the original dataset order.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    n = len(dataset)
    if n < 2:
        raise DataError("need at least two rows to split")
    rng = SplitMix64(seed)
    test_idx: list[int] = []
    if stratified:
        for cls in (0, 1):
            members = [int(i) for i in np.nonzero(dataset.labels == cls)[0]]
            if not members:
                raise DegenerateDataError(
                    "stratified split needs both classes present"
                )
            rng.shuffle(members)
            k = round(len(members) * test_fraction)
            test_idx += members[:k]
    else:
        members = list(range(n))
        rng.shuffle(members)
        test_idx = members[: round(n * test_fraction)]
    chosen = set(test_idx)
    train_idx = [i for i in range(n) if i not in chosen]
    return dataset.take(train_idx), dataset.take(sorted(chosen))


_COUNT_NAMES = ("tp", "tn", "fp", "fn")


def metrics_to_csv(metrics: Metrics, cm: ConfusionMatrix | None = None) -> str:
    lines = ["metric,value,flag"]
    for name in METRIC_NAMES:
        flag = "undefined" if name in metrics.undefined else ""
        lines.append(f"{name},{metrics.value(name)!r},{flag}")
    if cm is not None:
        for name in _COUNT_NAMES:
            lines.append(f"{name},{getattr(cm, name)},")
    return "\n".join(lines) + "\n"


def metrics_from_csv(text: str) -> Metrics:
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines or lines[0].rstrip("\r") != "metric,value,flag":
        raise DataError("bad metrics CSV header, expected metric,value,flag")
    values: dict[str, float] = {}
    undefined = []
    for lineno, raw in enumerate(lines[1:], start=2):
        cells = raw.rstrip("\r").split(",")
        if len(cells) != 3:
            raise DataError(f"line {lineno}: expected 3 fields")
        name, value, flag = cells
        if name in _COUNT_NAMES:
            # confusion-matrix rows ride along; compare only needs the rates
            continue
        if name not in METRIC_NAMES:
            raise DataError(f"line {lineno}: unknown metric {name!r}")
        try:
            values[name] = float(value)
        except ValueError:
            raise DataError(f"line {lineno}: bad value {value!r}") from None
        if flag == "undefined":
            undefined.append(name)
        elif flag != "":
            raise DataError(f"line {lineno}: unknown flag {flag!r}")
    missing = [m for m in METRIC_NAMES if m not in values]
    if missing:
        raise DataError(f"metrics CSV missing {', '.join(missing)}")
    return Metrics(undefined=tuple(undefined), **values)


def roc_to_csv(curve: RocCurve) -> str:
    lines = ["threshold,fpr,tpr"]
    for thr, (fpr, tpr) in zip(curve.thresholds, curve.points):
        lines.append(f"{thr!r},{fpr!r},{tpr!r}")
    return "\n".join(lines) + "\n"
