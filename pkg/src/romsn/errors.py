"""Exception types shared across the package."""


class RomsnError(Exception):
    """Base class for package errors."""


class InvalidParameter(RomsnError, ValueError):
    """A constructor or solver received an out-of-range argument."""


class InvalidProblem(InvalidParameter):
    """Problem data violates a physical constraint (e.g. sigma_s >= sigma_t)."""


class NumericalFailure(RomsnError, ArithmeticError):
    """An internal numerical procedure failed (root finding, bad denominator)."""


class ConvergenceError(RomsnError, RuntimeError):
    """An iteration hit its cap before reaching the tolerance."""

    def __init__(self, message, residual=None, iterations=None, sample_index=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.sample_index = sample_index


class ConfigError(RomsnError, ValueError):
    """Configuration could not be parsed or validated."""

    def __init__(self, message, key=None, line=None):
        where = ""
        if key is not None:
            where = f" [key {key!r}" + (f", line {line}" if line is not None else "") + "]"
        super().__init__(message + where)
        self.key = key
        self.line = line
