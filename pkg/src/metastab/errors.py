"""Exception types shared across the package."""


class InputDataError(ValueError):
    """The user-supplied landscape or configuration is invalid."""


class DegenerateLandscapeError(InputDataError):
    """Sampled data is not Morse (plateaus, non-confining edges, ...)."""


class InvariantViolation(RuntimeError):
    """An internal consistency check failed. Indicates a bug, not bad input."""
