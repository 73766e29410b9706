"""Exception types raised by the library.

Construction errors signal bad inputs (geometry, bounds, scenario files).
Runtime guards signal states the controller is never supposed to reach;
the simulator treats them as findings, halts, and preserves the trace.
"""


class EnclosimError(Exception):
    """Base class for all library errors."""


class AngleOutOfRange(EnclosimError):
    """A separation angle (given or implied closing) leaves (0, 180) degrees."""


class NonpositiveRadius(EnclosimError):
    """Enclosing radius must be strictly positive."""


class DimensionMismatch(EnclosimError):
    """An array does not have the shape required by the graph."""


class DecompositionMismatch(EnclosimError):
    """Rigidity matrix tail block is not the negated row sum of the agent block."""


class InfeasibleFormation(EnclosimError):
    """Desired distances do not fit inside the interaction/collision ranges."""


class InitialConditionViolation(EnclosimError):
    """Initial errors start on or outside their prescribed funnels."""


class DegenerateBound(EnclosimError):
    """Lower error bound reaches the desired distance, squared bound loses meaning."""


class NumericalDomain(EnclosimError):
    """An argument left the domain where a closed-form expression is defined."""


class OutOfBarrier(EnclosimError):
    """A transformed error reached its barrier. Carries the offending index.

    Parameters
    ----------
    kind : str
        "edge" or "heading".
    index : int
        Canonical edge index or agent index (0-based).
    value : float
        The normalized error that hit the barrier.
    bound : float
        The bound it reached.
    """

    def __init__(self, kind, index, value, bound):
        self.kind = kind
        self.index = index
        self.value = value
        self.bound = bound
        super().__init__(f"{kind} barrier reached at index {index}: value {value!r} vs bound {bound!r}")


class SingularityGuard(EnclosimError):
    """Heading error approached 90 degrees, linear velocity undefined."""


class ParseError(EnclosimError):
    """Scenario file is not well formed."""


class ValidationError(EnclosimError):
    """Scenario file parsed but a field violates its constraint."""
