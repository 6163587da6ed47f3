"""
Monte Carlo checks that estimator error matrices respect the computed
Cramer-Rao bounds, and the size of the known-vs-unknown nuisance gap.

Each experiment simulates data chunk by chunk from counter-based random
streams derived from (seed, chunk), so a seed gives bit-identical results
whatever the number of workers.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Sequence, Tuple

import numpy as np
import scipy.linalg as la

from ..errors import ConfigurationError, ConvergenceFailure, DimensionMismatch
from ..fim.core import CrbValue, Partition, crb_conditional, crb_marginal
from ..fim.numeric import gaussian_fim
from ..models.linear_mixed import LmmSpec, lmm_fisher, lmm_inflation
from ..models.sine_wave import SineSpec, sine_inflation_factors, sine_model
from ..utils.system import DEFAULT_CHUNK_SIZE, map_chunks, reduce_chunks

__all__ = [
    "Verdict", "EmpiricalMse", "ExperimentReport", "InflationStudy",
    "run_lmm_experiment", "run_sine_experiment", "fit_sine", "compare",
    "validate_lmm", "validate_sine", "LMM_SLACK", "SINE_SLACK",
    "MAX_DISCARD_FRACTION", "LMM_MODES", "SINE_MODES"
]

# sampling slack, linear problems at 1e5 trials and sine fits at 2000
LMM_SLACK = 0.05
SINE_SLACK = 0.15

# above this share of nonconvergent sine fits the run fails
MAX_DISCARD_FRACTION = 0.01

LMM_MODES = ('joint', 'z_known')
SINE_MODES = ('omega_known', 'omega_unknown')


class Verdict(str, Enum):
    ATTAINS = 'Attains'
    RESPECTS = 'Respects'
    VIOLATES = 'Violates'


@dataclass(frozen=True, eq=False)
class EmpiricalMse:
    """
    Sample MSE matrix of an estimator over Monte Carlo trials.
    """

    matrix: np.ndarray
    labels: Tuple[str, ...]
    trials: int
    seed: int
    estimator_name: str

    # nonconvergent trials excluded from the average
    discarded: int = 0

    log_gen_variance: float = field(default=None, init=False)

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.float64)
        matrix = 0.5 * (matrix + matrix.T)
        matrix.setflags(write=False)
        if len(self.labels) != matrix.shape[0]:
            raise DimensionMismatch(
                f'{len(self.labels)} labels for a {matrix.shape} MSE matrix')
        if self.trials < matrix.shape[0] + 1:
            logging.warning(
                f'{self.trials} trials for {matrix.shape[0]} parameters, '
                'generalized variance is not meaningful')
        sign, log_det = np.linalg.slogdet(matrix)
        object.__setattr__(self, 'matrix', matrix)
        object.__setattr__(self, 'labels', tuple(self.labels))
        object.__setattr__(
            self, 'log_gen_variance',
            float(log_det) if sign > 0 else -math.inf)

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def log_gen_variance_se(self) -> float:
        """
        Plain large-sample SE of the log generalized variance,
        sqrt(2 k / trials).
        """
        return math.sqrt(2.0 * self.dim / max(self.trials - self.discarded, 1))

    def variance(self, label: str) -> float:
        i = self.labels.index(label)
        return float(self.matrix[i, i])

    def block(self, labels: Sequence[str]) -> 'EmpiricalMse':
        """
        MSE of a subset of the estimated parameters.
        """
        missing = [label for label in labels if label not in self.labels]
        if missing:
            raise DimensionMismatch(f'{missing} not in {list(self.labels)}')
        idx = [self.labels.index(label) for label in labels]
        return EmpiricalMse(
            self.matrix[np.ix_(idx, idx)], tuple(labels), self.trials,
            self.seed, self.estimator_name, self.discarded)


@dataclass(frozen=True)
class ExperimentReport:
    name: str
    mse: EmpiricalMse
    bound: CrbValue
    verdict: Verdict
    slack: float


@dataclass(frozen=True)
class InflationStudy:
    """
    Both modes of an experiment with empirical and predicted inflation.
    """

    reports: List[ExperimentReport]

    # parameter -> (empirical ratio, predicted factor)
    inflation: Dict[str, Tuple[float, float]]

    @property
    def violated(self) -> bool:
        return any(r.verdict == Verdict.VIOLATES for r in self.reports)


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------
def compare(mse: EmpiricalMse, bound: CrbValue, slack: float) -> Verdict:
    """
    Compare generalized variance against a bound in log-space.
    Args:
        mse (EmpiricalMse): empirical MSE
        bound (CrbValue): Cramer-Rao bound over the same parameters
        slack (float): multiplicative sampling slack, >= 0
    Returns:
        Verdict
    """
    if mse.dim != bound.dim:
        raise DimensionMismatch(
            f'MSE over {mse.dim} parameters compared to a bound over '
            f'{bound.dim}')
    if slack < 0:
        raise ConfigurationError(f'slack must be >= 0, got {slack}')

    margin = math.log1p(slack)
    difference = mse.log_gen_variance - bound.log_value
    if difference < -margin:
        logging.warning(
            f'{mse.estimator_name} violates {bound.name}: log generalized '
            f'variance {mse.log_gen_variance:.6g} < {bound.log_value:.6g}')
        return Verdict.VIOLATES
    if difference <= margin:
        return Verdict.ATTAINS
    return Verdict.RESPECTS


# ---------------------------------------------------------------------------
# Linear mixed model
# ---------------------------------------------------------------------------
def _outer_sum(errors: np.ndarray) -> np.ndarray:
    return errors.T @ errors


def run_lmm_experiment(
            spec: LmmSpec,
            truth: Tuple[Sequence[float], Sequence[float]] = None,
            trials: int = 100000,
            seed: int = 0,
            mode: str = 'joint',
            workers: int = 1,
            chunk_size: int = DEFAULT_CHUNK_SIZE,
            progress: bool = False
        ) -> EmpiricalMse:
    """
    Least-squares estimation of x (and z in joint mode) from simulated
    y = A x + B z + w.
    Args:
        spec (LmmSpec): model description
        truth (tuple): true (x, z), zeros when None
        trials (int): number of simulated datasets, >= 100
        seed (int): random seed
        mode (str): 'joint' or 'z_known'
        workers (int): threads evaluating chunks
        chunk_size (int): trials per random stream
        progress (bool): show a progress bar
    Returns:
        EmpiricalMse over (x, z) in joint mode, x in z_known mode
    """
    if mode not in LMM_MODES:
        raise ConfigurationError(f'mode must be one of {LMM_MODES}: {mode}')
    if trials < 100:
        raise ConfigurationError(
            f'LMM experiment needs trials >= 100: {trials}')

    if truth is None:
        truth = (np.zeros(spec.k_x), np.zeros(spec.k_z))
    x = np.asarray(truth[0], dtype=np.float64).reshape(spec.k_x)
    z = np.asarray(truth[1], dtype=np.float64).reshape(spec.k_z)
    mean = spec.A @ x + spec.B @ z

    if mode == 'joint':
        estimator = la.pinv(spec.design)
        target = np.concatenate([x, z])
        offset = np.zeros(spec.n)
        labels = spec.x_labels + spec.z_labels
    else:
        estimator = la.pinv(spec.A)
        target = x
        offset = spec.B @ z
        labels = spec.x_labels

    def chunk(rng: np.random.Generator, size: int) -> np.ndarray:
        y = mean + rng.standard_normal((size, spec.n)) * math.sqrt(spec.v)
        errors = (y - offset) @ estimator.T - target
        return _outer_sum(errors)

    total = reduce_chunks(map_chunks(
        chunk, seed, trials, workers, chunk_size, progress,
        desc=f'lmm-{mode}'))
    return EmpiricalMse(
        total / trials, labels, int(trials), int(seed), f'lmm-ls-{mode}')


def validate_lmm(
            spec: LmmSpec,
            truth: Tuple[Sequence[float], Sequence[float]] = None,
            trials: int = 100000,
            seed: int = 0,
            slack: float = LMM_SLACK,
            workers: int = 1,
            progress: bool = False
        ) -> InflationStudy:
    """
    Run both LMM modes, compare x against CRB(x) and CRB(x|z), and report
    the empirical inflation next to |B^T B| / |B^T P_A B|.
    """
    fisher, partition = lmm_fisher(spec)
    joint = run_lmm_experiment(
        spec, truth, trials, seed, 'joint', workers, progress=progress)
    known = run_lmm_experiment(
        spec, truth, trials, seed, 'z_known', workers, progress=progress)

    joint_x = joint.block(spec.x_labels)
    marginal = crb_marginal(fisher, partition, 'x')
    conditional = crb_conditional(fisher, partition, 'x', ['z'])
    reports = [
        ExperimentReport(
            'lmm joint', joint_x, marginal,
            compare(joint_x, marginal, slack), slack),
        ExperimentReport(
            'lmm z_known', known, conditional,
            compare(known, conditional, slack), slack),
    ]
    empirical = math.exp(joint_x.log_gen_variance - known.log_gen_variance)
    return InflationStudy(reports, {'x': (empirical, lmm_inflation(spec))})


# ---------------------------------------------------------------------------
# Sine-wave fitting
# ---------------------------------------------------------------------------
def _three_parameter_fit(y: np.ndarray, omega: float) -> np.ndarray:
    k = np.arange(y.shape[-1])
    basis = np.column_stack(
        [np.cos(omega * k), np.sin(omega * k), np.ones(k.shape[0])])
    return la.lstsq(basis, y)[0]


def fit_sine(
            y: np.ndarray,
            grid_factor: int = 4,
            iterations: int = 20,
            tol: float = 1e-10
        ) -> np.ndarray:
    """
    Four-parameter sine fit: periodogram peak on a grid of grid_factor * n
    frequencies over (0, pi), then Gauss-Newton refinement of the
    least-squares cost.
    Args:
        y (np.ndarray): (n,) samples
        grid_factor (int): grid points per sample
        iterations (int): maximum refinement steps
        tol (float): stop when |d omega| <= tol * max(1, omega)
    Returns:
        np.ndarray (A, B, C, omega)
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    k = np.arange(n)

    grid = grid_factor * n
    spectrum = np.abs(np.fft.rfft(y - y.mean(), 2 * grid)) ** 2
    peak = 1 + int(np.argmax(spectrum[1:grid]))
    omega = math.pi * peak / grid

    a, b, c = _three_parameter_fit(y, omega)
    for _ in range(iterations):
        cos, sin = np.cos(omega * k), np.sin(omega * k)
        design = np.column_stack(
            [cos, sin, np.ones(n), k * (b * cos - a * sin)])
        a, b, c, step = la.lstsq(design, y)[0]
        omega += step
        if not 0.0 < omega < math.pi:
            raise ConvergenceFailure(f'Frequency left (0, pi): {omega}')
        if abs(step) <= tol * max(1.0, omega):
            a, b, c = _three_parameter_fit(y, omega)
            return np.array([a, b, c, omega])
    raise ConvergenceFailure(
        f'Sine fit did not converge in {iterations} iterations')


def run_sine_experiment(
            spec: SineSpec,
            trials: int = 2000,
            seed: int = 0,
            mode: str = 'omega_unknown',
            workers: int = 1,
            chunk_size: int = 250,
            progress: bool = False,
            max_discard: float = MAX_DISCARD_FRACTION
        ) -> EmpiricalMse:
    """
    Estimate (A, B, C) by linear least squares at the true frequency
    (omega_known) or (A, B, C, omega) by a four-parameter fit
    (omega_unknown).
    Args:
        spec (SineSpec): true sinusoid, n >= 64
        trials (int): number of simulated records
        seed (int): random seed
        mode (str): 'omega_known' or 'omega_unknown'
        workers (int): threads evaluating chunks
        chunk_size (int): trials per random stream
        progress (bool): show a progress bar
        max_discard (float): largest tolerated share of failed fits
    Returns:
        EmpiricalMse
    """
    if mode not in SINE_MODES:
        raise ConfigurationError(f'mode must be one of {SINE_MODES}: {mode}')
    if spec.n < 64:
        raise ConfigurationError(f'Sine experiment needs n >= 64: {spec.n}')
    guard = 2.0 * math.pi / spec.n
    if not guard <= spec.omega <= math.pi - guard:
        raise ConfigurationError(
            f'omega must stay {guard:.4g} away from 0 and pi: {spec.omega}')

    signal = sine_model(spec).signal(spec.theta)
    noise_scale = math.sqrt(spec.v)
    if mode == 'omega_known':
        k = np.arange(spec.n)
        basis = np.column_stack(
            [np.cos(spec.omega * k), np.sin(spec.omega * k), np.ones(spec.n)])
        estimator = la.pinv(basis)
        target = spec.theta[:3]
        labels = ('A', 'B', 'C')
    else:
        target = spec.theta
        labels = ('A', 'B', 'C', 'omega')

    def chunk(rng: np.random.Generator, size: int):
        y = signal + rng.standard_normal((size, spec.n)) * noise_scale
        if mode == 'omega_known':
            return _outer_sum(y @ estimator.T - target), 0
        errors, failed = [], 0
        for record in y:
            try:
                errors.append(fit_sine(record) - target)
            except ConvergenceFailure:
                failed += 1
        errors = np.array(errors).reshape(-1, 4)
        return _outer_sum(errors), failed

    partials = map_chunks(
        chunk, seed, trials, workers, chunk_size, progress,
        desc=f'sine-{mode}')
    discarded = int(sum(failed for _, failed in partials))
    if discarded:
        logging.warning(f'{discarded} of {trials} sine fits did not converge')
    if discarded > max_discard * trials:
        raise ConvergenceFailure(
            f'{discarded} of {trials} sine fits did not converge, above '
            f'{max_discard:.1%}', discarded=discarded, trials=trials)

    total = reduce_chunks([outer for outer, _ in partials])
    return EmpiricalMse(
        total / (trials - discarded), labels, int(trials), int(seed),
        f'sine-ls-{mode}', discarded)


def validate_sine(
            spec: SineSpec,
            trials: int = 2000,
            seed: int = 0,
            slack: float = SINE_SLACK,
            workers: int = 1,
            progress: bool = False
        ) -> InflationStudy:
    """
    Run both sine modes against bounds from the exact Fisher matrix and
    report MSE inflation of A, B and C next to the closed-form factors.
    """
    fisher = gaussian_fim(sine_model(spec), spec.theta, include_v=True)
    partition = Partition.singletons(fisher)
    known = run_sine_experiment(
        spec, trials, seed, 'omega_known', workers, progress=progress)
    unknown = run_sine_experiment(
        spec, trials, seed, 'omega_unknown', workers, progress=progress)

    known_bound = crb_conditional(
        fisher, partition, ['A', 'B', 'C'], ['omega', 'v'])
    unknown_bound = crb_conditional(
        fisher, partition, ['A', 'B', 'C', 'omega'], ['v'])
    reports = [
        ExperimentReport(
            'sine omega_known', known, known_bound,
            compare(known, known_bound, slack), slack),
        ExperimentReport(
            'sine omega_unknown', unknown, unknown_bound,
            compare(unknown, unknown_bound, slack), slack),
    ]
    predicted = sine_inflation_factors(spec)
    inflation = {
        name: (unknown.variance(name) / known.variance(name), predicted[name])
        for name in ('A', 'B', 'C')
    }
    return InflationStudy(reports, inflation)
