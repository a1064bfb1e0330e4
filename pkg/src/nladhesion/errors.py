"""Exception hierarchy."""


class SolverError(RuntimeError):
    """Base class for failures inside a time step."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time

    def at_time(self, t):
        self.time = t
        return self

    def __str__(self):
        msg = super().__str__()
        return msg if self.time is None else f"t={self.time:.17g}: {msg}"


class NonConvergence(SolverError):
    """A semismooth Newton loop hit its iteration cap."""


class IndefiniteSystem(SolverError):
    """The damage-weighted surface term destroys positive definiteness."""


class FixedPointDivergence(SolverError):
    """The staggered fixed-point loop hit its cap with a growing residual."""

    def __init__(self, message, history=(), time=None):
        super().__init__(message, time)
        self.history = list(history)


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class MissingKey(ConfigError):
    pass


class InvalidValue(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass
