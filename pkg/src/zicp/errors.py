"""Exception types shared across the package."""


class ZicpError(Exception):
    """Base class for all package-specific errors."""


class DomainError(ZicpError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DataFormatError(ZicpError, ValueError):
    """An input file is malformed; the message names the offending row."""


class EstepError(ZicpError, RuntimeError):
    """Importance sampling failed (degenerate weights, underflowing pmf)."""


class MStepError(ZicpError, RuntimeError):
    """A stationarity system is infeasible or its solver did not converge."""


class GuardError(ZicpError, ValueError):
    """An exact-enumeration guard was violated (instance too large)."""


class IdentifiabilityError(ZicpError, RuntimeError):
    """The dataset carries no information on part of the parameter vector."""


class StudyError(ZicpError, RuntimeError):
    """A simulation study or diagnostic cannot run on the given data."""


class NonConvergenceError(ZicpError, RuntimeError):
    """The EM iteration could not produce a usable estimate."""
