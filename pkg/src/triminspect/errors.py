"""Exception types shared across the package."""


class InspectionError(Exception):
    """Base class for all package errors."""


class ParameterError(InspectionError, ValueError):
    pass


class DomainError(InspectionError, ValueError):
    """A loss or metric evaluated outside its mathematical domain."""


class GeometryError(InspectionError, ValueError):
    pass


class UnknownLineError(InspectionError, LookupError):
    pass


class RenderError(InspectionError):
    pass


class DecodeError(InspectionError, ValueError):
    pass


class ConfigError(InspectionError, ValueError):
    pass


class CalibrationError(InspectionError):
    pass


class MeasurementIncomplete(InspectionError):
    """Raised when not every target point needed for a length was detected."""

    def __init__(self, missing):
        self.missing = tuple(missing)
        super().__init__(f"missing target points: {', '.join(self.missing)}")


class ReportError(InspectionError, OSError):
    pass
