import logging
import numpy as np
import scipy.linalg as la

from ..errors import NotPositiveDefinite, RankDeficient

__all__ = [
    "cholesky", "logdet", "chol_logdet", "spd_inverse", "min_eigenvalue",
    "numerical_rank", "check_full_column_rank", "random_spd",
    "RANK_TOLERANCE"
]

# relative tolerance for numerical rank decisions
RANK_TOLERANCE = 1e-10


def min_eigenvalue(matrix: np.ndarray) -> float:
    """
    Smallest eigenvalue of a symmetric matrix.
    Args:
        matrix (np.ndarray): symmetric (k, k) matrix
    Returns:
        float
    """
    return float(la.eigvalsh(matrix, subset_by_index=[0, 0])[0])


def cholesky(matrix: np.ndarray, quantity: str = 'matrix') -> np.ndarray:
    """
    Lower Cholesky factor, no jitter is ever added.
    Args:
        matrix (np.ndarray): symmetric (k, k) matrix
        quantity (str): name used in the error message
    Returns:
        lower triangular np.ndarray
    """
    try:
        return la.cholesky(matrix, lower=True, check_finite=True)
    except (la.LinAlgError, ValueError):
        eig = min_eigenvalue(matrix) if np.all(np.isfinite(matrix)) \
            else float('nan')
        raise NotPositiveDefinite(
            f'{quantity} is not positive definite '
            f'(smallest eigenvalue {eig:.6g})',
            quantity=quantity, min_eigenvalue=eig)


def logdet(chol: np.ndarray) -> float:
    """
    Log determinant from a Cholesky factor.
    Args:
        chol (np.ndarray): [k, k] cholesky factor of the matrix
    Returns:
        The log determinant (scalar)
    """
    return 2.0 * float(np.sum(np.log(np.diagonal(chol))))


def chol_logdet(matrix: np.ndarray, quantity: str = 'matrix') -> float:
    """
    Log determinant of a symmetric positive definite matrix.
    """
    return logdet(cholesky(matrix, quantity))


def spd_inverse(matrix: np.ndarray, quantity: str = 'matrix') -> np.ndarray:
    """
    Inverse of a symmetric positive definite matrix through Cholesky.
    """
    chol = cholesky(matrix, quantity)
    inverse = la.cho_solve((chol, True), np.eye(matrix.shape[0]))
    return 0.5 * (inverse + inverse.T)


def numerical_rank(matrix: np.ndarray, rtol: float = RANK_TOLERANCE) -> int:
    """
    Numerical rank using the singular values, tolerance relative to the
    largest singular value.
    """
    singular_values = la.svdvals(np.atleast_2d(matrix))
    if singular_values.size == 0 or singular_values[0] == 0:
        return 0
    return int(np.sum(singular_values > rtol * singular_values[0]))


def check_full_column_rank(
            matrix: np.ndarray,
            name: str = 'matrix',
            rtol: float = RANK_TOLERANCE
        ) -> None:
    """
    Raise RankDeficient unless the matrix has full column rank.
    """
    rank = numerical_rank(matrix, rtol)
    if rank < matrix.shape[1]:
        raise RankDeficient(
            f'{name} has rank {rank} < {matrix.shape[1]} columns')


def random_spd(
            k: int,
            rng: np.random.Generator,
            max_condition: float = 1e6
        ) -> np.ndarray:
    """
    Draw a random symmetric positive definite matrix with a bounded
    condition number: random orthogonal eigenvectors and log-uniform
    eigenvalues in [1, max_condition].
    Args:
        k (int): matrix size
        rng (np.random.Generator): random stream
        max_condition (float): upper bound on the condition number
    Returns:
        (k, k) np.ndarray
    """
    q, r = la.qr(rng.standard_normal((k, k)))
    q = q * np.sign(np.diagonal(r))
    log_eigs = rng.uniform(0.0, np.log(max_condition), size=k)
    scale = np.exp(rng.uniform(-3.0, 3.0))
    matrix = scale * (q * np.exp(log_eigs)) @ q.T
    logging.debug(f'Drew random SPD matrix of size {k}')
    return 0.5 * (matrix + matrix.T)
