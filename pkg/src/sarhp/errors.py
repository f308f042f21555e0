"""Exception types shared across the toolkit."""


class SarhpError(Exception):
    """Base class for all toolkit errors."""


class TrackSpanError(SarhpError):
    """A requested time lies outside the orbit track's sample span."""


class DegenerateBasisError(SarhpError):
    """A plane basis could not be constructed (up hint parallel to normal)."""


class NoCoverageError(SarhpError):
    """A geometric query produced no usable terrain coverage."""


class SceneGenerationError(SarhpError):
    """Synthetic scene construction failed (e.g. buildings cannot be placed)."""


class MetricError(SarhpError):
    """Metric evaluation is undefined for the given inputs."""


class FormatError(SarhpError):
    """A raster or metadata file is malformed."""
