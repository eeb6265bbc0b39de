"""Exception hierarchy shared by all modules."""


class BranchTailError(Exception):
    """Base class for library errors."""


class UnsupportedAnalytic(BranchTailError):
    """No closed form is available for this quantity."""


class InfiniteMean(BranchTailError):
    pass


class Supercritical(BranchTailError):
    """Mean offspring number (or spectral radius) is >= 1."""

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class NoConvergence(BranchTailError):
    pass


class DimensionMismatch(BranchTailError, ValueError):
    pass


class DegenerateSubtree(BranchTailError):
    """The direct-line subtree of the eliminated type is not subcritical."""


class EmptySample(BranchTailError, ValueError):
    pass


class InsufficientData(BranchTailError, ValueError):
    pass


class TooFewExceedances(BranchTailError, ValueError):
    pass


class IndexOutOfRange(BranchTailError, IndexError):
    pass


class ConfigError(BranchTailError, ValueError):
    pass
