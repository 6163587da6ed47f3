"""
Linear mixed model y = A x + B z + w, w ~ N(0, v I).
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
import scipy.linalg as la

from ..errors import ConfigurationError, DimensionMismatch, RankDeficient
from ..fim.core import CrbValue, FisherMatrix, Partition, make_fisher
from ..fim.numeric import AdditiveGaussianModel, LogLikelihoodModel
from ..utils.linalg import (
    RANK_TOLERANCE, check_full_column_rank, chol_logdet, cholesky,
    numerical_rank
)

__all__ = [
    "LmmSpec", "lmm_fisher", "orth_projector", "lmm_inflation",
    "lmm_crb_closed_form", "lmm_model", "lmm_loglik_model"
]


def _as_columns(matrix, name: str) -> np.ndarray:
    matrix = np.array(matrix, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix[:, None]
    if matrix.ndim != 2:
        raise DimensionMismatch(f'{name} must be a matrix, got {matrix.shape}')
    return matrix


@dataclass(frozen=True, eq=False)
class LmmSpec:
    """
    Known regressors A (n, k_x) and B (n, k_z) with noise variance v.
    Requires rank([A B]) = k_x + k_z < n.
    """

    A: np.ndarray
    B: np.ndarray
    v: float = 1.0

    def __post_init__(self):
        a = _as_columns(self.A, 'A')
        b = _as_columns(self.B, 'B')
        if a.shape[0] != b.shape[0]:
            raise DimensionMismatch(
                f'A has {a.shape[0]} rows but B has {b.shape[0]}')
        if not self.v > 0:
            raise ConfigurationError(f'Noise variance must be > 0: {self.v}')

        k = a.shape[1] + b.shape[1]
        if k >= a.shape[0]:
            raise RankDeficient(
                f'k_x + k_z = {k} must be smaller than n = {a.shape[0]}')
        rank = numerical_rank(np.hstack([a, b]), RANK_TOLERANCE)
        if rank < k:
            raise RankDeficient(f'rank([A B]) = {rank} < k_x + k_z = {k}')

        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, 'A', a)
        object.__setattr__(self, 'B', b)
        object.__setattr__(self, 'v', float(self.v))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def k_x(self) -> int:
        return self.A.shape[1]

    @property
    def k_z(self) -> int:
        return self.B.shape[1]

    @property
    def design(self) -> np.ndarray:
        return np.hstack([self.A, self.B])

    @property
    def x_labels(self) -> Tuple[str, ...]:
        return tuple(f'x_{i}' for i in range(self.k_x))

    @property
    def z_labels(self) -> Tuple[str, ...]:
        return tuple(f'z_{i}' for i in range(self.k_z))

    def append_rows(self, a_rows, b_rows) -> 'LmmSpec':
        """
        More observations of the same parameters.
        """
        a_rows = _as_columns(a_rows, 'a_rows').reshape(-1, self.k_x)
        b_rows = _as_columns(b_rows, 'b_rows').reshape(-1, self.k_z)
        return LmmSpec(
            np.vstack([self.A, a_rows]), np.vstack([self.B, b_rows]), self.v)

    def append_observations(self, a_rows, b_rows, b_new) -> 'LmmSpec':
        """
        More observations that also bring new nuisance parameters: the new
        rows load on x, z and on extra z columns that old rows do not see.
        """
        a_rows = _as_columns(a_rows, 'a_rows').reshape(-1, self.k_x)
        m = a_rows.shape[0]
        b_rows = _as_columns(b_rows, 'b_rows').reshape(m, self.k_z)
        b_new = _as_columns(b_new, 'b_new').reshape(m, -1)
        b = np.block([
            [self.B, np.zeros((self.n, b_new.shape[1]))],
            [b_rows, b_new]
        ])
        return LmmSpec(np.vstack([self.A, a_rows]), b, self.v)


def lmm_fisher(spec: LmmSpec) -> Tuple[FisherMatrix, Partition]:
    """
    Joint Fisher matrix over (x, z, v).
    Args:
        spec (LmmSpec): model description
    Returns:
        FisherMatrix, Partition with blocks x, z and v
    """
    a, b, v = spec.A, spec.B, spec.v
    entries = np.block([
        [a.T @ a, a.T @ b, np.zeros((spec.k_x, 1))],
        [b.T @ a, b.T @ b, np.zeros((spec.k_z, 1))],
        [np.zeros((1, spec.k_x)), np.zeros((1, spec.k_z)),
         np.array([[spec.n / (2.0 * v)]])]
    ]) / v
    labels = spec.x_labels + spec.z_labels + ('v',)
    fisher = make_fisher(entries, labels)
    k = spec.k_x + spec.k_z
    partition = Partition((
        ('x', tuple(range(spec.k_x))),
        ('z', tuple(range(spec.k_x, k))),
        ('v', (k,)),
    ))
    return fisher, partition


def orth_projector(a: np.ndarray) -> np.ndarray:
    """
    Projector onto the orthogonal complement of range(A).
    Args:
        a (np.ndarray): (n, k) full column rank matrix
    Returns:
        (n, n) np.ndarray, I - A (A^T A)^{-1} A^T
    """
    a = _as_columns(a, 'A')
    check_full_column_rank(a, 'A')
    q, _ = la.qr(a, mode='economic')
    projector = np.eye(a.shape[0]) - q @ q.T
    return 0.5 * (projector + projector.T)


def _projected_gram(b: np.ndarray, a: np.ndarray) -> np.ndarray:
    """
    B^T P_A B as the Schur form B^T B - B^T A (A^T A)^{-1} A^T B, exact
    when A^T B is exactly zero.
    """
    cross = a.T @ b
    chol = cholesky(a.T @ a, quantity='A^T A')
    gram = b.T @ b - cross.T @ la.cho_solve((chol, True), cross)
    return 0.5 * (gram + gram.T)


def lmm_inflation(spec: LmmSpec) -> float:
    """
    Factor |B^T B| / |B^T P_A B| taking CRB(x|z) to CRB(x).
    Args:
        spec (LmmSpec): model description
    Returns:
        float >= 1
    """
    log_factor = chol_logdet(spec.B.T @ spec.B, 'B^T B') - chol_logdet(
        _projected_gram(spec.B, spec.A), 'B^T P_A B')
    logging.info(f'LMM inflation factor {math.exp(log_factor):.12g}')
    return math.exp(log_factor)


def lmm_crb_closed_form(spec: LmmSpec) -> Dict[str, CrbValue]:
    """
    Closed-form bounds: CRB(z|x) = v^kz / |B^T B|,
    CRB(z) = v^kz / |B^T P_A B| and the same with x and z swapped.
    """
    log_v = math.log(spec.v)
    a, b = spec.A, spec.B
    return {
        'x|z': CrbValue(
            spec.k_x * log_v - chol_logdet(a.T @ a, 'A^T A'),
            ('x',), ('z',), spec.k_x),
        'x': CrbValue(
            spec.k_x * log_v - chol_logdet(_projected_gram(a, b), 'A^T P_B A'),
            ('x',), (), spec.k_x),
        'z|x': CrbValue(
            spec.k_z * log_v - chol_logdet(b.T @ b, 'B^T B'),
            ('z',), ('x',), spec.k_z),
        'z': CrbValue(
            spec.k_z * log_v - chol_logdet(_projected_gram(b, a), 'B^T P_A B'),
            ('z',), (), spec.k_z),
    }


def lmm_model(spec: LmmSpec) -> AdditiveGaussianModel:
    """
    The model as an additive Gaussian signal over theta = (x, z).
    """
    design = spec.design
    return AdditiveGaussianModel(
        signal=lambda theta: design @ theta,
        v=spec.v,
        theta_labels=spec.x_labels + spec.z_labels,
        signal_gradient=lambda theta: design,
        name='linear-mixed',
    )


def lmm_loglik_model(spec: LmmSpec) -> LogLikelihoodModel:
    """
    Log-likelihood over theta = (x, z, v) for the Monte Carlo estimators.
    """
    design = spec.design
    n, k = design.shape

    def loglik(theta: np.ndarray, y: np.ndarray) -> np.ndarray:
        v = theta[k]
        residual = y - design @ theta[:k]
        return -0.5 * n * np.log(2.0 * np.pi * v) - \
            np.sum(residual ** 2, axis=-1) / (2.0 * v)

    def sampler(theta: np.ndarray, rng: np.random.Generator,
                size: int) -> np.ndarray:
        noise = rng.standard_normal((size, n)) * np.sqrt(theta[k])
        return design @ theta[:k] + noise

    return LogLikelihoodModel(
        loglik, sampler, spec.x_labels + spec.z_labels + ('v',),
        name='linear-mixed')
