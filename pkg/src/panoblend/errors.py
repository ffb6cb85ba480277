"""Exception hierarchy shared by all blending modules."""


class BlendError(Exception):
    """Base class for every error raised by panoblend."""


class StructuralError(BlendError, ValueError):
    """Shapes, channel counts or list lengths do not line up."""


class FrameRangeError(BlendError, IndexError):
    """A frame index is outside the available range of a stream."""


class ParameterError(BlendError, ValueError):
    """An algorithm parameter is outside its valid domain."""


class DegenerateLayoutError(BlendError):
    """Masks cannot produce a usable seam layout."""


class TopologyError(BlendError):
    """A region has a topology the boundary tracer does not support."""

    def __init__(self, message, holes=0, components=1):
        super().__init__(message)
        self.holes = holes
        self.components = components


class DataUnavailableError(BlendError):
    """A required pixel lies outside the coverage of a stream."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NumericalError(BlendError, ArithmeticError):
    """A denominator or system became numerically degenerate."""


class RankDeficiencyError(NumericalError):
    """The multi-spline normal equations are singular after gauge fixing."""


class ManifestError(BlendError):
    """A scene manifest is malformed or references missing files."""
