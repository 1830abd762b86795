"""Exception hierarchy shared by all modules."""


class RoughStabError(Exception):
    """Base class for every error raised by roughstab."""


class InvalidDimensionError(RoughStabError, ValueError):
    pass


class InvalidPartitionError(RoughStabError, ValueError):
    pass


class EmptyPathError(RoughStabError, ValueError):
    pass


class InvalidParameterError(RoughStabError, ValueError):
    pass


class InvalidIntervalError(RoughStabError, ValueError):
    pass


class IndexRangeError(RoughStabError, IndexError):
    pass


class DomainError(RoughStabError, ValueError):
    """Evaluation point lies outside the domain of a scalar function."""


class NumericalFailureError(RoughStabError, ArithmeticError):
    pass


class BlowUpError(RoughStabError):
    """The state left the configured bounding box.

    ``time`` is the first sampling instant at which the bound was exceeded.
    """

    def __init__(self, time: float, bound: float, message: str | None = None):
        self.time = time
        self.bound = bound
        super().__init__(message or f"state left |x| <= {bound:g} at t = {time:.17g}")


class EquilibriumViolationError(RoughStabError, ValueError):
    """Drift does not vanish at the origin, so the origin is not an equilibrium."""


class InvalidConfigError(RoughStabError, ValueError):
    pass
