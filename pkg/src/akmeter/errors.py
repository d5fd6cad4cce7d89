"""Exception hierarchy shared by every akmeter module."""


class AKMeterError(Exception):
    """Base class for all akmeter failures."""


class ZeroNorm(AKMeterError):
    pass


class BoundaryLeak(AKMeterError):
    """Amplitudes do not decay at the lattice edge; the grid is too small."""


class GridMismatch(AKMeterError):
    pass


class NotHermitian(AKMeterError):
    pass


class AliasingDetected(AKMeterError):
    """Mass was lost when a linear convolution was cropped to its target lattice."""


class InterpolationError(AKMeterError):
    pass


class EmptyRegion(AKMeterError):
    """The outcome region carries (numerically) zero probability."""


class NotFactorized(AKMeterError):
    pass


class NotPredictivelyOptimal(AKMeterError):
    pass


class FormViolation(AKMeterError):
    """A marginal kernel is not of convolution form."""


class InequalityViolation(AKMeterError):
    pass


class ScenarioError(AKMeterError):
    pass
