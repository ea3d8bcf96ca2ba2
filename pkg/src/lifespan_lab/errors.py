"""Exception hierarchy shared by all modules."""


class LifespanLabError(Exception):
    """Base class for every error raised by this package."""


# exponent algebra
class SingularSystem(LifespanLabError, ValueError):
    """All exponents equal one, so ``P - I`` is singular."""


class DomainError(LifespanLabError, ValueError):
    """Arguments outside the domain where a quantity is defined."""


class NotSupercritical(LifespanLabError, ValueError):
    """The distinguished exponent does not exceed ``n/2``."""


# constant chain
class ZeroLambda(LifespanLabError, ValueError):
    """The chain constant needs a strictly positive decay rate."""


class BelowThreshold(LifespanLabError, ValueError):
    """Initial datum at or below the blow-up threshold; no conclusion."""

    def __init__(self, threshold, value=None):
        self.threshold = threshold
        self.value = value
        msg = f"f2(0) must exceed the threshold {threshold!r}"
        if value is not None:
            msg += f" (got {value!r})"
        super().__init__(msg)


class NoRoot(LifespanLabError, ValueError):
    """The radius equation has no root (data vanish identically)."""


# integrators
class ToleranceFailure(LifespanLabError, RuntimeError):
    """Adaptive step size collapsed before escape or horizon."""


class InsufficientData(LifespanLabError, ValueError):
    """Too few samples for a fit or a trace check."""


class PreconditionError(LifespanLabError, ValueError):
    """Inputs violate a documented precondition."""


# test function / simulation
class UnsupportedDimension(LifespanLabError, ValueError):
    """Only dimensions 1, 2 and 3 have closed-form eigenfunctions here."""


class MeshTooCoarse(LifespanLabError, ValueError):
    """Fewer than the required number of nodes inside the ball."""


class StabilityFailure(LifespanLabError, RuntimeError):
    """The explicit reaction term forced the time step below its floor."""


class CampaignFailed(LifespanLabError, RuntimeError):
    """More than the allowed fraction of campaign runs failed."""
