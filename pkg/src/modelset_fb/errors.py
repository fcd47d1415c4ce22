"""Exception and warning types raised across the package."""


class ModelSetError(Exception):
    """Base class for all package errors."""


class SingularMatrix(ModelSetError, ValueError):
    pass


class RegionTooLarge(ModelSetError):
    """Enumeration would exceed the candidate cap; shrink the region or raise the cap."""


class ProjectionNotInjective(ModelSetError, ValueError):
    pass


class LevelTooFine(ModelSetError):
    """Dyadic refinement would exceed the cube cap."""


class AmbiguousMatch(ModelSetError):
    """More than one Fourier-module point matches a frequency within tolerance."""


class TailNotSummable(ModelSetError, ValueError):
    pass


class Condition1Violated(ModelSetError):
    """A dual point (theta, 0) lies in the forbidden strip; S_R is too small."""


class HypothesisViolated(ModelSetError):
    """eps_R exceeds the cube side, so the aligned-cube tail estimate does not apply."""


class ConfigError(ModelSetError, ValueError):
    pass


class DensenessSuspect(UserWarning):
    """The internal projections missed part of the reference box."""
