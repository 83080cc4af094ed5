"""Exception taxonomy shared across the package."""


class InputError(ValueError):
    """An argument violates an operation's precondition."""


class ShapeError(InputError):
    """Array shapes are incompatible with the requested operation."""


class FormatError(ValueError):
    """An external file does not follow its documented binary format."""


class ConfigError(ValueError):
    """An experiment config is malformed or internally inconsistent."""


class NumericError(RuntimeError):
    """A numeric routine produced NaN/Inf or otherwise diverged."""
