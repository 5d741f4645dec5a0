"""Exception hierarchy shared by all modules."""


class StarkError(Exception):
    """Base class for every error raised by this package."""


class DomainError(StarkError, ValueError):
    """Argument outside the domain of a function (e.g. x < 0)."""


class AiryRangeError(StarkError, OverflowError):
    """An Airy value overflowed the double range."""


class ConvergenceError(StarkError):
    """An iteration hit its cap without meeting its tolerance."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class TruncationError(StarkError):
    """The truncated domain is too short for the requested accuracy."""


class NotIntegrableError(StarkError, ValueError):
    """The potential (or its declared tail) is not in L^1."""


class QuadratureError(ConvergenceError):
    """Adaptive quadrature did not reach its tolerance."""


class BracketError(StarkError):
    """No sign change could be found around an eigenvalue."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class OrderingError(StarkError):
    """Eigenvalue brackets overlap or indices are inconsistent."""


class NormalizationError(StarkError):
    """Norming-constant denominator vanishes: not an eigenvalue of that bc."""


class ContourError(StarkError):
    """A zero of the boundary function lies (numerically) on the contour."""


class SpectrumError(StarkError):
    """A per-k failure inside a spectrum run; carries the partial records."""

    def __init__(self, message, partial, failures):
        super().__init__(message)
        self.partial = partial
        self.failures = failures
