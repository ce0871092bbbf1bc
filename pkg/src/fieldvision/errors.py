"""Exception types shared across the package."""


class VisionError(Exception):
    """Base class for all fieldvision errors."""


class GeometryError(VisionError):
    """Invalid geometric input: non-finite, degenerate, or out of range."""


class WireParseError(VisionError):
    """Bytes on the wire are not parseable JSON."""


class WireValidationError(VisionError):
    """Parsed JSON violates the detection message schema."""

    def __init__(self, field_path: str, reason: str):
        super().__init__(f"{field_path}: {reason}")
        self.field_path = field_path
        self.reason = reason


class ClockSkewError(VisionError):
    """A clock that must be monotone was observed going backwards."""


class NoDataError(VisionError):
    """A measurement was requested before any sample existed."""


class TopicError(VisionError):
    """Unknown topic name or invalid topic registration."""


class SubscriptionClosed(VisionError):
    """The subscription was closed and its queue drained."""


class DetectorUnavailableError(VisionError):
    """The detector backend cannot be reached."""


class DetectorTimeoutError(VisionError):
    """The detector backend did not answer within the deadline."""


class AmbiguousShapeError(VisionError):
    """A contour has no usable principal axis (nearly isotropic)."""


class DatasetError(VisionError):
    """Ground-truth or prediction files failed to load."""

    def __init__(self, message: str, path=None, line: int | None = None):
        where = ""
        if path is not None:
            where = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + where)
        self.path = path
        self.line = line


class ConfigError(VisionError):
    """Invalid or incomplete runtime configuration."""
