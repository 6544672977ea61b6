"""Exception hierarchy shared across the package."""


class AsimError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(AsimError):
    """Operand shapes are incompatible for the requested operation."""


class ConfigError(AsimError):
    """A configuration value is out of its allowed range or inconsistent."""


class DataError(AsimError):
    """Input data violates a contract (bad label index, id out of range, ...)."""


class UsageError(AsimError):
    """An API was called in a way its contract forbids."""


class NumericError(AsimError):
    """A non-finite value was encountered where finiteness is required."""


class DegenerateMaskError(AsimError):
    """A boolean mask leaves no element to operate on."""


class DivergenceError(AsimError):
    """Training produced a non-finite loss or gradient."""


class ParseError(AsimError):
    """A data file could not be parsed; message carries path and position."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc += f"{path}"
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line


class EmptyUnitError(DataError):
    """A knowledge unit has no tokens left after cleaning."""


class EmptyVocabError(DataError):
    """A vocabulary would contain no real tokens."""
