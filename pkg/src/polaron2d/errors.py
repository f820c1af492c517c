"""Exception hierarchy shared by all modules."""


class Polaron2DError(Exception):
    """Base class for every error raised by this package."""


class DomainError(Polaron2DError, ValueError):
    """An argument lies outside the domain where the formula is defined."""


class PreconditionError(DomainError):
    """A documented precondition on the inputs does not hold."""


class ResourceLimitError(Polaron2DError):
    """The request would exceed a configured mode or work cap."""


class ConvergenceError(Polaron2DError):
    """A cutoff or iteration policy could not reach the requested accuracy."""


class ContractViolation(Polaron2DError):
    """A caller-supplied function violates its documented contract."""


class DivergenceError(Polaron2DError):
    """A sum or integral that must be finite diverges."""


class NoSolutionError(Polaron2DError):
    """A root search found no admissible sign change."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class RegimeError(Polaron2DError):
    """Parameters fall outside the regime where an equation is well posed."""


class SingularError(Polaron2DError):
    """A denominator vanished exactly."""


class QuadratureError(Polaron2DError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class BracketError(NoSolutionError):
    """No sign change on the initial or widened bracket."""
