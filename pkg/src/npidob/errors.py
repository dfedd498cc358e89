"""Exception types raised across the package."""


class ConfigError(ValueError):
    """Base class for configuration document problems."""


class MissingField(ConfigError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"missing required field {name!r}")


class InvalidValue(ConfigError):
    def __init__(self, name, reason):
        self.name = name
        self.reason = reason
        super().__init__(f"invalid value for {name!r}: {reason}")


class UnitError(ConfigError):
    pass


class NonFiniteState(ArithmeticError):
    """A state variable became NaN or infinite.

    ``tick`` is the control tick at which the blow-up was detected, when known.
    """

    def __init__(self, message, tick=None):
        self.tick = tick
        if tick is not None:
            message = f"{message} (tick {tick})"
        super().__init__(message)


class NotHurwitz(ValueError):
    pass


class IllConditioned(ValueError):
    pass


class NonPositiveGamma(ValueError):
    pass


class EmptyWindow(ValueError):
    pass


class ScenarioMismatch(ValueError):
    pass
