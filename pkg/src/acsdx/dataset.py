"""Labeled sensor datasets and their CSV interchange format.

One row is a timestamped 5-sensor ADC reading plus the applied bag pressure,
the derived label, and the collection scenario. The on-disk schema is:

    timestamp_ms,s0,s1,s2,s3,s4,bag_pressure_mmhg,label,scenario

UTF-8, LF line endings, header required. Readers reject anything that does
not parse exactly; the error message names the file line.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SchemaError
from .validation import ADC_MAX, N_SENSORS, check_counts

NEGATIVE = 0
POSITIVE = 1
ACS_THRESHOLD_MMHG = 30.0

SCENARIOS = ("motionless", "motion")
CSV_HEADER = "timestamp_ms,s0,s1,s2,s3,s4,bag_pressure_mmhg,label,scenario"


def label_for_pressure(pressure_mmhg: float) -> int:
    """Positive at or above the 30 mmHg clinical decision threshold."""
    return POSITIVE if pressure_mmhg >= ACS_THRESHOLD_MMHG else NEGATIVE


@dataclass(frozen=True)
class SensorFrame:
    """One reading from the 5-sensor sleeve."""

    timestamp_ms: int
    counts: tuple[int, ...]

    def __post_init__(self):
        if not isinstance(self.timestamp_ms, (int, np.integer)) or self.timestamp_ms < 0:
            raise ValueError("timestamp_ms must be a nonnegative integer")
        object.__setattr__(self, "timestamp_ms", int(self.timestamp_ms))
        object.__setattr__(self, "counts", check_counts(self.counts))


@dataclass
class Dataset:
    """Columnar labeled dataset for one collection scenario."""

    scenario: str
    timestamps: np.ndarray  # int64 ms
    counts: np.ndarray      # (n, 5) int64 ADC counts
    pressures: np.ndarray   # float64 mmHg
    labels: np.ndarray      # uint8

    def __len__(self) -> int:
        return len(self.labels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.scenario == other.scenario
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.counts, other.counts)
            and np.array_equal(self.pressures, other.pressures)
            and np.array_equal(self.labels, other.labels)
        )

    def features(self) -> np.ndarray:
        """Feature matrix for the classifiers (float64 copy of counts)."""
        return self.counts.astype(np.float64)

    def frames(self) -> list[SensorFrame]:
        return [
            SensorFrame(int(ts), tuple(int(c) for c in row))
            for ts, row in zip(self.timestamps, self.counts)
        ]

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            scenario=self.scenario,
            timestamps=self.timestamps[idx],
            counts=self.counts[idx],
            pressures=self.pressures[idx],
            labels=self.labels[idx],
        )


def _format_pressure(p: float) -> str:
    return str(int(p)) if float(p).is_integer() else repr(float(p))


def dataset_to_csv(ds: Dataset) -> str:
    lines = [CSV_HEADER]
    for ts, row, p, lab in zip(ds.timestamps, ds.counts, ds.pressures, ds.labels):
        cells = [str(int(ts))]
        cells += [str(int(c)) for c in row]
        cells.append(_format_pressure(p))
        cells.append(str(int(lab)))
        cells.append(ds.scenario)
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_csv(ds: Dataset, path) -> None:
    with open(path, "wb") as fh:
        fh.write(dataset_to_csv(ds).encode("utf-8"))


def _parse_int(text: str, what: str, line: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise SchemaError(f"line {line}: {what} {text!r} is not an integer") from None


def read_csv(path) -> Dataset:
    """Parse and validate a dataset file. Raises SchemaError on any defect."""
    with open(path, "rb") as fh:
        text = fh.read().decode("utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise SchemaError("line 1: empty file, expected header")
    header = lines[0].rstrip("\r")
    if header != CSV_HEADER:
        raise SchemaError(f"line 1: bad header, expected {CSV_HEADER!r}")
    if len(lines) < 2:
        raise SchemaError("line 2: file has a header but no data rows")

    timestamps, counts, pressures, labels = [], [], [], []
    scenario = None
    for lineno, raw in enumerate(lines[1:], start=2):
        cells = raw.rstrip("\r").split(",")
        if len(cells) != 9:
            raise SchemaError(f"line {lineno}: expected 9 fields, got {len(cells)}")
        ts = _parse_int(cells[0], "timestamp_ms", lineno)
        if ts < 0:
            raise SchemaError(f"line {lineno}: timestamp_ms {ts} is negative")
        row = []
        for j in range(N_SENSORS):
            c = _parse_int(cells[1 + j], f"s{j}", lineno)
            if not 0 <= c <= ADC_MAX:
                raise SchemaError(f"line {lineno}: s{j}={c} outside [0, {ADC_MAX}]")
            row.append(c)
        try:
            pressure = float(cells[6])
        except ValueError:
            raise SchemaError(
                f"line {lineno}: bag_pressure_mmhg {cells[6]!r} is not a number"
            ) from None
        if not np.isfinite(pressure) or pressure < 0:
            raise SchemaError(f"line {lineno}: bag_pressure_mmhg {pressure} invalid")
        label = _parse_int(cells[7], "label", lineno)
        if label not in (NEGATIVE, POSITIVE):
            raise SchemaError(f"line {lineno}: label {label} must be 0 or 1")
        if label != label_for_pressure(pressure):
            raise SchemaError(
                f"line {lineno}: label {label} inconsistent with "
                f"bag_pressure_mmhg {pressure} and the 30 mmHg rule"
            )
        scen = cells[8]
        if scen not in SCENARIOS:
            raise SchemaError(f"line {lineno}: unknown scenario {scen!r}")
        if scenario is None:
            scenario = scen
        elif scen != scenario:
            raise SchemaError(f"line {lineno}: mixed scenarios in one file")
        timestamps.append(ts)
        counts.append(row)
        pressures.append(pressure)
        labels.append(label)

    return Dataset(
        scenario=scenario,
        timestamps=np.asarray(timestamps, dtype=np.int64),
        counts=np.asarray(counts, dtype=np.int64),
        pressures=np.asarray(pressures, dtype=np.float64),
        labels=np.asarray(labels, dtype=np.uint8),
    )
