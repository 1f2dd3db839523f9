"""Exception hierarchy for the levyasym package."""


class LevyAsymError(Exception):
    """Base class for all package-specific errors."""


class SchemaError(LevyAsymError):
    """A density-spec document is structurally malformed."""


class InvariantError(LevyAsymError):
    """A parsed density spec violates a model invariant."""


class DomainError(LevyAsymError):
    """A function argument lies outside its mathematical domain."""


class QuadratureError(LevyAsymError):
    """Adaptive quadrature could not meet tolerance within its budget."""


class RangeError(LevyAsymError):
    """A saddle target mean is unreachable inside the solver window."""


class ConvergenceError(LevyAsymError):
    """An iterative solver exceeded its iteration budget."""


class ModeError(LevyAsymError):
    """An oracle was asked for a spec class it does not support."""


class StepError(LevyAsymError):
    """A marching oracle's Richardson error estimate is too large."""


class TailBoundError(LevyAsymError):
    """The Fourier oracle cannot certify its truncation tail."""


class MassError(LevyAsymError):
    """A tilted intensity mass is too large to sample."""


class DominationError(LevyAsymError):
    """The thinning envelope fails to dominate the tilted intensity."""


class PreconditionError(LevyAsymError):
    """A statistical precondition of an operation fails."""
