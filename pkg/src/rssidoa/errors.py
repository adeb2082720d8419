"""Exception types raised across the package."""


class DoaError(ValueError):
    """Base class for all domain errors."""


class EmptyCalibration(DoaError):
    pass


class MissingCell(DoaError):
    def __init__(self, angle_deg, sensor):
        self.angle_deg = angle_deg
        self.sensor = sensor
        super().__init__(f"no calibration trials for angle {angle_deg} deg, sensor {sensor}")


class AllZero(DoaError):
    pass


class SensorOutOfRange(DoaError, IndexError):
    pass


class InvalidK(DoaError):
    pass


class DomainError(DoaError):
    pass


class DimensionMismatch(DoaError):
    pass


class DegenerateInput(DoaError):
    pass


class TooFewPoints(DoaError):
    pass


class SingularInformation(DoaError):
    pass


class NoPulsesCaptured(DoaError):
    pass


class BadSpec(DoaError):
    pass


class ParseError(DoaError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateCollapse(UserWarning):
    """Fewer distinct values than requested clusters; fewer clusters returned."""
