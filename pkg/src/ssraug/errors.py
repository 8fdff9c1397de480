"""Exception types shared across the package."""


class SsrError(Exception):
    """Base class for all package errors."""


class InvalidImage(SsrError):
    """Image contains non-finite or out-of-contract values."""


class InvalidConfig(SsrError):
    """A configuration parameter violates its bounds."""


class DegenerateImage(SsrError):
    """Image carries no usable variation (e.g. constant)."""


class DegenerateHistogram(SsrError):
    """Histogram has too few non-empty bins to fit a mixture."""


class ShapeMismatch(SsrError):
    """Two arrays that must agree in shape/size do not."""


class EmptyRegion(SsrError):
    """A region mask selects no pixels where pixels are required."""


class NoValidCrop(SsrError):
    """Random crop retries exhausted without satisfying exclusions."""


class NoClutterMass(SsrError):
    """Soft clutter weight mass is too small for stable statistics."""


class EmptyPopulation(SsrError):
    """A population-level statistic was requested on an empty list."""
