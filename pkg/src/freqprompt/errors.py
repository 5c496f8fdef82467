"""Exception types shared across the package."""


class DimensionError(ValueError):
    pass


class ParameterError(ValueError):
    pass


class CoordinateError(ValueError):
    pass


class NumericError(ArithmeticError):
    pass


class StateError(RuntimeError):
    pass


class DecodeError(ValueError):
    """Raised when an image or tensor file cannot be parsed.

    ``offset`` is the byte position at which decoding gave up.
    """

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class ConfigError(ValueError):
    """Invalid configuration value; ``key`` names the offending setting."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
