"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the domain where a formula is defined."""


class QuadratureNonConvergence(RuntimeError):
    """Adaptive quadrature could not reach the requested tolerance."""


class NoCrossing(RuntimeError):
    """The QFI never crosses its half-maximum inside the search window."""


class TruncationWarning(UserWarning):
    """A truncated photon-number series left non-negligible tail mass."""
