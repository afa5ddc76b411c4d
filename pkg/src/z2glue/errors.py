"""Exception types shared across the package."""


class Z2GlueError(Exception):
    """Base class for all package errors."""


class ConfigError(Z2GlueError, ValueError):
    """An invalid parameter; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ResolutionError(Z2GlueError):
    """The grid cannot resolve a requested feature."""


class UnsupportedModeError(Z2GlueError, ValueError):
    pass


class SingularParameterError(Z2GlueError, ValueError):
    pass


class SolverError(Z2GlueError):
    """A linear solve failed; ``history`` holds the residuals seen so far."""

    def __init__(self, message: str, history=()):
        self.history = list(history)
        super().__init__(message)


class ObstructedDeformationError(SolverError):
    pass


class DivergenceError(SolverError):
    pass
