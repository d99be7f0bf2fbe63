"""Noninvasive compartment-pressure screening from a five-sensor sleeve.

The package simulates the sleeve's force-sensor electronics, trains a
deterministic random-forest classifier on the synthetic readings, stores
models in a compact binary format, scores them against a calibrated-average
baseline, and decodes/classifies the device's byte telemetry. Everything is
reproducible from a single seed.
"""

from .baseline import AverageBaseline
from .dataset import (
    ACS_THRESHOLD_MMHG,
    Dataset,
    SensorFrame,
    label_for_pressure,
    read_csv,
    write_csv,
)
from .errors import (
    AcsdxError,
    DataError,
    DegenerateDataError,
    MalformedModelError,
    ModelCapacityError,
    ModelCorruptionError,
    ModelError,
    ModelFormatError,
    ModelVersionError,
    NotFittedError,
    SchemaError,
    WireFormatError,
)
from .forest import ForestClassifier, classify, dump_tree, vote_fraction
from .metrics import (
    ConfusionMatrix,
    Metrics,
    RocCurve,
    compute_metrics,
    confusion_matrix,
    is_significant_difference,
    roc_points,
    train_test_split,
)
from .model_io import decode_model, encode_model, model_digest
from .rng import SplitMix64, derive_seed
from .simulate import MotionProfile, SimConfig, generate_dataset
from .study import StudyReport, render_report, run_study
from .telemetry import (
    DiagnosticEvent,
    StreamDecoder,
    crc16,
    decode_stream,
    encode_diagnostic_event,
    encode_sensor_frame,
    run_pipeline,
)

__version__ = "0.1.0"

__all__ = [
    "ACS_THRESHOLD_MMHG",
    "AcsdxError",
    "AverageBaseline",
    "ConfusionMatrix",
    "DataError",
    "Dataset",
    "DegenerateDataError",
    "DiagnosticEvent",
    "ForestClassifier",
    "MalformedModelError",
    "Metrics",
    "ModelCapacityError",
    "ModelCorruptionError",
    "ModelError",
    "ModelFormatError",
    "ModelVersionError",
    "MotionProfile",
    "NotFittedError",
    "RocCurve",
    "SchemaError",
    "SensorFrame",
    "SimConfig",
    "SplitMix64",
    "StreamDecoder",
    "StudyReport",
    "WireFormatError",
    "classify",
    "compute_metrics",
    "confusion_matrix",
    "crc16",
    "decode_model",
    "decode_stream",
    "derive_seed",
    "dump_tree",
    "encode_diagnostic_event",
    "encode_model",
    "encode_sensor_frame",
    "generate_dataset",
    "is_significant_difference",
    "label_for_pressure",
    "model_digest",
    "read_csv",
    "render_report",
    "roc_points",
    "run_pipeline",
    "run_study",
    "train_test_split",
    "vote_fraction",
    "write_csv",
    "__version__",
]
