"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A parameter violates the documented preconditions."""


class CapacityError(RuntimeError):
    """The requested exact computation exceeds the configured state-space cap."""


class ComputationError(RuntimeError):
    """A numerical routine failed to converge or bracket its target."""
