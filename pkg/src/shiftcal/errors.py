"""Exception types shared across the toolkit."""


class ShiftcalError(Exception):
    """Base class for all toolkit errors."""


class InvalidParameterError(ShiftcalError, ValueError):
    """A gate or operation parameter is out of its allowed domain."""


class InvalidCircuitError(ShiftcalError, ValueError):
    """A circuit violates a structural constraint (indices, terminal measure, ...)."""


class DimensionMismatchError(ShiftcalError, ValueError):
    """Vector/matrix dimensions do not agree with the qubit count."""


class CapabilityError(ShiftcalError):
    """A backend was asked to do something outside its capability descriptor."""


class MissingRecordError(ShiftcalError, KeyError):
    """Replay backend has no stored counts for the requested execution key."""

    def __init__(self, key: str):
        super().__init__(key)
        self.key = key

    def __str__(self) -> str:
        return f"no stored counts for execution key {self.key!r}"


class SchemaVersionError(ShiftcalError, ValueError):
    """A persisted file declares a schema version this code does not read."""

    def __init__(self, found, expected):
        super().__init__(f"schema_version {found!r} not supported (expected {expected!r})")
        self.found = found
        self.expected = expected


class SingularCalibrationError(ShiftcalError, ValueError):
    """Calibration matrix is singular; inversion-based mitigation impossible."""


class MissingCalibrationError(ShiftcalError, ValueError):
    """An operation required readout calibration data that was not provided."""


class DegenerateDataError(ShiftcalError, ValueError):
    """Data admits no meaningful fit statistic (e.g. all observations identical)."""


class ReportError(ShiftcalError, ValueError):
    """Report generation was asked to aggregate unusable or empty inputs."""
