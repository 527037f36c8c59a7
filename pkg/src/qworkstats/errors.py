"""Exception hierarchy shared across the package.

Exit codes used by the CLI: config/input errors -> 2, convergence -> 3,
capacity -> 4.
"""


class QWorkStatsError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InputError(QWorkStatsError):
    """Invalid user input (dimensions, ranges, malformed config)."""

    exit_code = 2


class CapacityError(QWorkStatsError):
    """Requested problem exceeds a dense-storage or enumeration guard."""

    exit_code = 4


class ConvergenceError(QWorkStatsError):
    """An iterative solver failed to reach its tolerance."""

    exit_code = 3

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class StabilityError(QWorkStatsError):
    """Unphysical result (negative excitation eigenvalue, negative weight)."""

    exit_code = 3


class NumericalError(QWorkStatsError):
    """Generic numerical failure (bracket failure, integrator drift)."""

    exit_code = 3
