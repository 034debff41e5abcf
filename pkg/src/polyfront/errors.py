"""Exception hierarchy shared by all solvers, mapped to CLI exit codes."""


class PolyfrontError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(PolyfrontError):
    """Invalid configuration, precondition, or input file."""

    exit_code = 2


class NumericalFailureError(PolyfrontError):
    """NaN/Inf values, negativity beyond tolerance, or per-step mass drift."""

    exit_code = 3


class DomainOverflowError(PolyfrontError):
    """Significant mass outside the computational domain."""

    exit_code = 4


class ConvergenceFailureError(PolyfrontError):
    """An iterative procedure (relaxation, bracketing) did not converge."""

    exit_code = 5
