"""Exception types raised across the package."""


class RgmixError(Exception):
    """Base class for all package errors."""


class DimensionError(RgmixError, ValueError):
    """Array shapes or dimensions are inconsistent."""


class SupportError(RgmixError, ValueError):
    """A parameter or argument lies outside its valid support."""


class RejectionCapError(RgmixError, RuntimeError):
    """Accept-reject sampling exhausted its attempt budget.

    Attributes:
        attempts: number of proposals tried before giving up.
    """

    def __init__(self, attempts: int, message: str | None = None):
        self.attempts = attempts
        self._message = message
        super().__init__(message or f"rejection sampling failed after {attempts} attempts")

    def __reduce__(self):
        return (RejectionCapError, (self.attempts, self._message))


class SeriesError(RgmixError, RuntimeError):
    """An infinite series failed to reach the requested tolerance."""


class DataFormatError(RgmixError, ValueError):
    """A data file could not be parsed.

    Attributes:
        line: 1-based line number of the offending row, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        self._message = message
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)

    def __reduce__(self):
        return (DataFormatError, (self._message, self.line))


class ConfigError(RgmixError, ValueError):
    """A configuration file or option is invalid."""


class ChainError(RgmixError, RuntimeError):
    """A Gibbs sweep failed; carries the sweep index.

    Attributes:
        iteration: 1-based sweep index at which the failure occurred.
    """

    def __init__(self, iteration: int, cause: Exception):
        self.iteration = iteration
        self.cause = cause
        super().__init__(f"sweep {iteration} failed: {cause}")

    def __reduce__(self):
        return (ChainError, (self.iteration, self.cause))
