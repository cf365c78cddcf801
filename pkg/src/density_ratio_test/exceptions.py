from typing import Optional, Sequence


class DensityRatioTestError(ValueError):
    """Base class for errors raised by :mod:`density_ratio_test`."""


class DataError(DensityRatioTestError):
    """Raised when input data cannot be used."""


class ParseError(DataError):
    """Raised when a row of a data file cannot be parsed.

    The one-based ``line`` of the offending row in the file is kept so
    callers can point users at it.
    """

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f'line {line}: {message}'
        super().__init__(message)
        self.line = line


class SchemaError(DataError):
    pass


class EmptyDataError(DataError):
    pass


class DegenerateAxisError(DataError):
    pass


class InvalidSettingError(DensityRatioTestError):
    pass


class PathologicalSettingError(DensityRatioTestError):
    """Raised when rejection sampling from a truncated density is hopeless."""


class PartitionError(DensityRatioTestError):
    pass


class InsufficientDataError(DensityRatioTestError):
    pass


class InvalidContextError(DensityRatioTestError):
    """Raised when a threshold context violates the hypotheses a test needs."""

    def __init__(self, violations: Sequence[str]):
        self.violations = tuple(violations)
        super().__init__(f'Threshold context violates: {", ".join(self.violations)}.')


class PlanError(DensityRatioTestError):
    pass
