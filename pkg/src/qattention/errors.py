"""Exception hierarchy.

Each class carries the process exit code the CLI maps it to, so that
usage, I/O, convergence and numerical failures are distinguishable from
a shell.
"""


class QAttentionError(Exception):
    exit_code = 1


class UsageError(QAttentionError, ValueError):
    exit_code = 2


class SizeError(UsageError):
    """Register size outside the supported 1..16 qubit range."""


class QubitIndexError(QAttentionError, IndexError):
    exit_code = 2


class DimensionError(UsageError):
    pass


class DomainError(UsageError):
    pass


class GridError(UsageError):
    pass


class StorageError(QAttentionError, OSError):
    exit_code = 3


class CompatibilityError(StorageError):
    """Artifacts produced under different schemas or configs were mixed."""


class ConvergenceError(QAttentionError, RuntimeError):
    exit_code = 4

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NumericalHealthError(QAttentionError, ArithmeticError):
    exit_code = 5


class FitError(NumericalHealthError):
    pass


class UndefinedContrastError(NumericalHealthError):
    pass
