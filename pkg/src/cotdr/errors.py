"""Exception types shared across the toolkit."""


class ConfigError(ValueError):
    """A configuration value violates its contract."""


class SizeLimitError(ConfigError):
    """A requested size exceeds the resource guard."""


class ShapeError(ValueError):
    """Arrays disagree in length, grid, or sample rate."""


class PeakEdgeError(ValueError):
    """Peak sits too close to the search-window edge; widen the window."""


class DegeneratePeakError(ValueError):
    """Peak window carries no usable curvature (all values equal)."""


class MeasurementError(RuntimeError):
    """A measurement run could not produce a latency estimate."""


class TraceFormatError(ValueError):
    """A trace file is malformed or has an unsupported version."""
