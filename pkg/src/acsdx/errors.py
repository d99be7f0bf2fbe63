"""Exception types shared across the package."""


class AcsdxError(Exception):
    """Base class for every error this package raises on purpose."""


class DataError(AcsdxError):
    """Invalid or unusable input data. CLI exit code 2."""


class SchemaError(DataError):
    """Malformed dataset file. The message names the offending line."""


class DegenerateDataError(DataError):
    """Data that cannot support the requested fit (single class, constant sensor)."""


class NotFittedError(AcsdxError):
    """Estimator used before fit (or before decode populated it)."""


class ModelError(AcsdxError):
    """Model blob problems. CLI exit code 3."""


class ModelFormatError(ModelError):
    """Blob does not parse: bad magic, truncation, trailing bytes."""


class ModelVersionError(ModelFormatError):
    """Blob declares a format version this build does not read."""


class ModelCorruptionError(ModelFormatError):
    """Checksum mismatch: the bytes were damaged after encoding."""


class MalformedModelError(ModelFormatError):
    """Checksum is fine but the structure violates the format contract."""


class ModelCapacityError(ModelError):
    """Model too large for the fixed-width format fields."""


class WireFormatError(AcsdxError):
    """Telemetry frame field out of range or unencodable. CLI exit code 3."""
