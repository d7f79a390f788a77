"""Exception types shared across the package."""


class StocbfError(Exception):
    """Base class for all library errors."""


class DimensionError(StocbfError, ValueError):
    """An evaluated map returned (or was given) the wrong shape."""


class DomainError(StocbfError, ValueError):
    """A field or compensator was evaluated outside its validity region."""


class ParameterError(StocbfError, ValueError):
    """A scalar parameter violates its documented constraint."""


class ConstructionError(StocbfError, ValueError):
    """Derived example parameters violate a construction constraint."""


class SingularityError(StocbfError, ArithmeticError):
    """The min-norm formula was requested where its denominator vanishes."""


class NumericalBlowupError(StocbfError, RuntimeError):
    """A simulated state or input became non-finite.

    Carries the offending state, the path index and the time at which
    the blowup was detected.
    """

    def __init__(self, message, x=None, path_index=None, t=None):
        super().__init__(message)
        self.x = x
        self.path_index = path_index
        self.t = t
