"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates an operation's precondition."""


class EmptySetError(ParameterError):
    """An operation that needs a nonempty set received the empty set."""


class VacuousTestError(ParameterError):
    """A statistical check was requested where both sides are trivially equal."""
