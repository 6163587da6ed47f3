"""
Fisher information for user-supplied models.

`gaussian_fim` is exact for y = x(theta) + w with white Gaussian w of
variance v, J = D^T D / v with D the signal Jacobian (plus n / (2 v^2) for
v itself). `mc_score_fim` and `fd_hessian_fim` estimate J from a
log-likelihood by Monte Carlo, using central finite differences.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as la

from ..errors import DimensionMismatch, NotPositiveDefinite, ConfigurationError
from ..utils.linalg import min_eigenvalue
from ..utils.system import DEFAULT_CHUNK_SIZE, map_chunks, reduce_chunks
from .core import FisherMatrix, make_fisher

__all__ = [
    "AdditiveGaussianModel", "LogLikelihoodModel", "FimEstimate",
    "DEFAULT_STEP", "finite_difference_steps", "finite_difference_jacobian",
    "gaussian_fim", "mc_score_fim", "fd_hessian_fim"
]

# relative central-difference step, scaled by max(1, |theta_i|)
DEFAULT_STEP = 1e-5


@dataclass(frozen=True)
class AdditiveGaussianModel:
    """
    y = signal(theta) + w, w ~ N(0, v I).
    """

    # theta -> (n,) signal
    signal: Callable[[np.ndarray], np.ndarray]

    # noise variance
    v: float

    theta_labels: Tuple[str, ...]

    # theta -> (n, k) Jacobian, finite-differenced when missing
    signal_gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None

    name: str = 'additive-gaussian'

    def __post_init__(self):
        if not self.v > 0:
            raise ConfigurationError(
                f'Noise variance must be positive, got {self.v}')
        object.__setattr__(self, 'theta_labels', tuple(self.theta_labels))


@dataclass(frozen=True)
class LogLikelihoodModel:
    """
    Generic model given by its log-likelihood and a data sampler.
    loglik(theta, y) must broadcast over leading batch axes of y, and
    sampler(theta, rng, size) returns an array of shape (size, n).
    """

    loglik: Callable[[np.ndarray, np.ndarray], np.ndarray]
    sampler: Callable[[np.ndarray, np.random.Generator, int], np.ndarray]
    theta_labels: Tuple[str, ...]
    name: str = 'loglik'

    def __post_init__(self):
        object.__setattr__(self, 'theta_labels', tuple(self.theta_labels))


@dataclass(frozen=True)
class FimEstimate:
    """
    Monte Carlo Fisher matrix estimate with per-entry standard errors.
    """

    fisher: FisherMatrix
    standard_error: np.ndarray
    trials: int
    seed: int
    estimator: str
    step: float


def _theta(theta: Sequence[float], labels: Sequence[str]) -> np.ndarray:
    theta = np.array(theta, dtype=np.float64).reshape(-1)
    if theta.shape[0] != len(labels):
        raise DimensionMismatch(
            f'theta has {theta.shape[0]} entries for labels {list(labels)}')
    return theta


def finite_difference_steps(
            theta: np.ndarray,
            step: float = DEFAULT_STEP
        ) -> np.ndarray:
    """
    Per-parameter central-difference steps, step * max(1, |theta_i|).
    """
    if step <= 0:
        raise ConfigurationError(f'Finite-difference step must be > 0: {step}')
    return step * np.maximum(1.0, np.abs(theta))


def finite_difference_jacobian(
            func: Callable[[np.ndarray], np.ndarray],
            theta: np.ndarray,
            step: float = DEFAULT_STEP
        ) -> np.ndarray:
    """
    Central-difference Jacobian of a vector function.
    Args:
        func (Callable): theta -> (n,) array
        theta (np.ndarray): point of evaluation
        step (float): relative step
    Returns:
        (n, k) np.ndarray
    """
    theta = np.asarray(theta, dtype=np.float64)
    steps = finite_difference_steps(theta, step)
    columns = []
    for i, h in enumerate(steps):
        upper, lower = theta.copy(), theta.copy()
        upper[i] += h
        lower[i] -= h
        columns.append(
            (np.asarray(func(upper)) - np.asarray(func(lower))) / (2.0 * h))
    return np.stack(columns, axis=-1)


def gaussian_fim(
            model: AdditiveGaussianModel,
            theta: Sequence[float],
            include_v: bool = False,
            step: float = DEFAULT_STEP
        ) -> FisherMatrix:
    """
    Exact Fisher matrix of an additive white-Gaussian model.
    Args:
        model (AdditiveGaussianModel): signal model
        theta (Sequence[float]): signal parameters
        include_v (bool): append the noise variance as a parameter 'v'
        step (float): relative step when the gradient is finite-differenced
    Returns:
        FisherMatrix
    """
    theta = _theta(theta, model.theta_labels)
    n = np.asarray(model.signal(theta)).reshape(-1).shape[0]

    if model.signal_gradient is not None:
        gradient = np.asarray(model.signal_gradient(theta), dtype=np.float64)
    else:
        gradient = finite_difference_jacobian(model.signal, theta, step)
    gradient = gradient.reshape(n, -1)
    if gradient.shape[1] != theta.shape[0]:
        raise DimensionMismatch(
            f'Signal gradient has {gradient.shape[1]} columns for '
            f'{theta.shape[0]} parameters')

    info = gradient.T @ gradient / model.v
    labels = model.theta_labels
    if include_v:
        info = la.block_diag(info, [[n / (2.0 * model.v ** 2)]])
        labels = labels + ('v',)

    try:
        return make_fisher(info, labels)
    except NotPositiveDefinite as err:
        raise NotPositiveDefinite(
            f'{model.name} is not identifiable at theta={theta.tolist()}: '
            f'{err}', quantity=err.quantity,
            min_eigenvalue=err.min_eigenvalue)


def _monte_carlo_fim(
            model: LogLikelihoodModel,
            theta: Sequence[float],
            trials: int,
            seed: int,
            step: float,
            per_trial: Callable[[np.ndarray, np.ndarray, np.ndarray],
                                np.ndarray],
            estimator: str,
            workers: int,
            chunk_size: int,
            progress: bool
        ) -> FimEstimate:
    if trials < 2:
        raise ConfigurationError(f'{estimator} needs trials >= 2: {trials}')
    theta = _theta(theta, model.theta_labels)
    steps = finite_difference_steps(theta, step)

    def chunk(rng: np.random.Generator, size: int) -> np.ndarray:
        data = model.sampler(theta, rng, size)
        info = per_trial(theta, steps, data)
        return np.stack([info.sum(axis=0), (info ** 2).sum(axis=0)])

    totals = reduce_chunks(map_chunks(
        chunk, seed, trials, workers, chunk_size, progress, desc=estimator))
    mean = totals[0] / trials
    variance = (totals[1] / trials - mean ** 2) * trials / (trials - 1)
    standard_error = np.sqrt(np.maximum(variance, 0.0) / trials)
    mean = 0.5 * (mean + mean.T)

    try:
        fisher = make_fisher(mean, model.theta_labels)
    except NotPositiveDefinite:
        eig = min_eigenvalue(mean)
        raise NotPositiveDefinite(
            f'{estimator} estimate for {model.name} is not positive definite '
            f'with {trials} trials (smallest eigenvalue {eig:.6g}), '
            'increase trials', quantity=estimator, min_eigenvalue=eig)

    logging.info(
        f'{estimator}: {model.name}, {trials} trials, max SE '
        f'{float(np.max(standard_error)):.3g}')
    return FimEstimate(
        fisher, standard_error, int(trials), int(seed), estimator, step)


def _scores(theta: np.ndarray, steps: np.ndarray, loglik, data) -> np.ndarray:
    scores = []
    for i, h in enumerate(steps):
        upper, lower = theta.copy(), theta.copy()
        upper[i] += h
        lower[i] -= h
        scores.append((loglik(upper, data) - loglik(lower, data)) / (2.0 * h))
    return np.stack(scores, axis=-1)


def mc_score_fim(
            model: LogLikelihoodModel,
            theta: Sequence[float],
            trials: int,
            seed: int,
            step: float = DEFAULT_STEP,
            workers: int = 1,
            chunk_size: int = DEFAULT_CHUNK_SIZE,
            progress: bool = False
        ) -> FimEstimate:
    """
    Monte Carlo mean of score outer products, E[s s^T].
    Args:
        model (LogLikelihoodModel): log-likelihood and sampler
        theta (Sequence[float]): true parameter value
        trials (int): number of simulated datasets
        seed (int): random seed
        step (float): relative central-difference step
        workers (int): threads evaluating chunks
        chunk_size (int): trials per random stream
        progress (bool): show a progress bar
    Returns:
        FimEstimate
    """
    def per_trial(theta, steps, data):
        scores = _scores(theta, steps, model.loglik, data)
        return scores[:, :, None] * scores[:, None, :]

    return _monte_carlo_fim(
        model, theta, trials, seed, step, per_trial, 'mc_score_fim',
        workers, chunk_size, progress)


def fd_hessian_fim(
            model: LogLikelihoodModel,
            theta: Sequence[float],
            trials: int,
            seed: int,
            step: float = DEFAULT_STEP,
            workers: int = 1,
            chunk_size: int = DEFAULT_CHUNK_SIZE,
            progress: bool = False
        ) -> FimEstimate:
    """
    Monte Carlo mean of negated finite-difference Hessians, -E[d2 l].
    Arguments as in mc_score_fim.
    """
    def per_trial(theta, steps, data):
        loglik = model.loglik
        k = theta.shape[0]
        center = loglik(theta, data)
        info = np.empty(center.shape + (k, k))
        for i in range(k):
            for j in range(i, k):
                if i == j:
                    upper, lower = theta.copy(), theta.copy()
                    upper[i] += steps[i]
                    lower[i] -= steps[i]
                    second = (loglik(upper, data) - 2.0 * center +
                              loglik(lower, data)) / steps[i] ** 2
                else:
                    values = []
                    for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                        point = theta.copy()
                        point[i] += si * steps[i]
                        point[j] += sj * steps[j]
                        values.append(loglik(point, data))
                    second = (values[0] - values[1] - values[2] +
                              values[3]) / (4.0 * steps[i] * steps[j])
                info[..., i, j] = -second
                info[..., j, i] = -second
        return info

    return _monte_carlo_fim(
        model, theta, trials, seed, step, per_trial, 'fd_hessian_fim',
        workers, chunk_size, progress)
