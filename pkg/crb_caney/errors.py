import numpy as np

__all__ = [
    "CrbError", "NumericalError", "ConfigurationError",
    "NotSymmetric", "NotPositiveDefinite", "RankDeficient",
    "SingularJacobian", "ConvergenceFailure", "DimensionMismatch",
    "EmptyComplement", "InvalidOrder", "InvalidPartition"
]


class CrbError(Exception):
    """
    Base class for every error raised by crb_caney.
    """


# ---------------------------------------------------------------------------
# Numerical failures, reported by the CLI with exit code 3
# ---------------------------------------------------------------------------
class NumericalError(CrbError, ValueError):
    """
    A quantity could not be computed from otherwise well-formed input.
    """


class NotSymmetric(NumericalError):
    pass


class NotPositiveDefinite(NumericalError, np.linalg.LinAlgError):
    """
    Cholesky factorization failed. The message names the offending
    quantity and, when available, its smallest eigenvalue.
    """

    def __init__(self, message: str, quantity: str = None,
                 min_eigenvalue: float = None):
        super().__init__(message)
        self.quantity = quantity
        self.min_eigenvalue = min_eigenvalue


class RankDeficient(NumericalError):
    pass


class SingularJacobian(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    """
    Iterative fit did not converge. `discarded` and `trials` are set when
    the failure summarizes a Monte Carlo run.
    """

    def __init__(self, message: str, discarded: int = 0, trials: int = 0):
        super().__init__(message)
        self.discarded = discarded
        self.trials = trials


# ---------------------------------------------------------------------------
# Malformed requests, reported by the CLI with exit code 2
# ---------------------------------------------------------------------------
class ConfigurationError(CrbError, ValueError):
    """
    The request or configuration does not describe a valid computation.
    """


class DimensionMismatch(ConfigurationError):
    pass


class EmptyComplement(ConfigurationError):
    pass


class InvalidOrder(ConfigurationError):
    pass


class InvalidPartition(ConfigurationError):
    pass
