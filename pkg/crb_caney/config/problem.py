import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from omegaconf import DictConfig, OmegaConf

from ..errors import ConfigurationError
from ..fim.core import FisherMatrix, Partition, make_fisher
from ..fim.numeric import FimEstimate, fd_hessian_fim, gaussian_fim, \
    mc_score_fim
from ..models.gaussian_mean import gaussian_mean_loglik_model
from ..models.linear_mixed import LmmSpec, lmm_fisher, lmm_loglik_model
from ..models.reparameterize import reparameterize
from ..models.sine_wave import SineSpec, amplitude_phase_jacobian, \
    sine_fisher_dominant, sine_model

__all__ = [
    "Problem", "build_problem", "lmm_spec_from_config",
    "sine_spec_from_config", "MODELS", "DEFAULT_LOGLIK_TRIALS"
]

MODELS = ('matrix', 'lmm', 'sine', 'custom-loglik')

DEFAULT_LOGLIK_TRIALS = 10000


@dataclass(frozen=True)
class Problem:
    """
    Fisher matrix and partition described by an AnalysisConfig.
    """

    fisher: FisherMatrix
    partition: Partition
    model: str
    lmm: Optional[LmmSpec] = None
    sine: Optional[SineSpec] = None
    estimate: Optional[FimEstimate] = None


def _container(value):
    if value is None:
        return None
    if OmegaConf.is_config(value):
        return OmegaConf.to_container(value, resolve=True)
    return value


def lmm_spec_from_config(conf: DictConfig) -> LmmSpec:
    a, b = _container(conf.lmm.A), _container(conf.lmm.B)
    if not a or not b:
        raise ConfigurationError('lmm model needs both lmm.A and lmm.B')
    return LmmSpec(np.array(a, dtype=np.float64),
                   np.array(b, dtype=np.float64), conf.lmm.v)


def sine_spec_from_config(conf: DictConfig) -> SineSpec:
    sine = conf.sine
    return SineSpec(sine.A, sine.B, sine.C, sine.omega, sine.v, sine.n)


def _sine_fisher(conf: DictConfig, spec: SineSpec) -> FisherMatrix:
    if conf.sine.fim == 'dominant':
        fisher, _ = sine_fisher_dominant(spec)
    elif conf.sine.fim == 'exact':
        fisher = gaussian_fim(sine_model(spec), spec.theta, include_v=True)
    else:
        raise ConfigurationError(
            f'sine.fim must be dominant or exact: {conf.sine.fim}')

    if conf.sine.parameterization == 'amplitude-phase':
        fisher = reparameterize(fisher, amplitude_phase_jacobian(spec))
    elif conf.sine.parameterization != 'in-phase-quadrature':
        raise ConfigurationError(
            'sine.parameterization must be in-phase-quadrature or '
            f'amplitude-phase: {conf.sine.parameterization}')
    return fisher


def _loglik_estimate(conf: DictConfig) -> FimEstimate:
    loglik = conf.loglik
    theta = _container(loglik.theta)
    if loglik.name == 'gaussian-mean':
        model = gaussian_mean_loglik_model(loglik.n, loglik.v)
        theta = theta if theta is not None else [0.0]
    elif loglik.name == 'linear-mixed':
        spec = lmm_spec_from_config(conf)
        model = lmm_loglik_model(spec)
        if theta is None:
            x = _container(conf.lmm.x) or [0.0] * spec.k_x
            z = _container(conf.lmm.z) or [0.0] * spec.k_z
            theta = list(x) + list(z) + [spec.v]
    else:
        raise ConfigurationError(
            'loglik.name must be gaussian-mean or linear-mixed: '
            f'{loglik.name}')

    trials = conf.trials or DEFAULT_LOGLIK_TRIALS
    if loglik.estimator == 'score':
        estimator = mc_score_fim
    elif loglik.estimator == 'hessian':
        estimator = fd_hessian_fim
    else:
        raise ConfigurationError(
            f'loglik.estimator must be score or hessian: {loglik.estimator}')
    return estimator(
        model, theta, trials, conf.seed, loglik.step, workers=conf.workers)


def build_problem(conf: DictConfig) -> Problem:
    """
    Build the Fisher matrix and partition of a configuration.
    Args:
        conf (DictConfig): merged AnalysisConfig
    Returns:
        Problem
    """
    lmm, sine, estimate, partition = None, None, None, None
    if conf.model == 'matrix':
        labels, matrix = _container(conf.labels), _container(conf.matrix)
        if not matrix:
            raise ConfigurationError('matrix model needs a matrix entry')
        if labels is None:
            labels = [f'theta_{i}' for i in range(len(matrix))]
        fisher = make_fisher(matrix, labels, conf.bayesian)
    elif conf.model == 'lmm':
        lmm = lmm_spec_from_config(conf)
        fisher, partition = lmm_fisher(lmm)
    elif conf.model == 'sine':
        sine = sine_spec_from_config(conf)
        fisher = _sine_fisher(conf, sine)
    elif conf.model == 'custom-loglik':
        estimate = _loglik_estimate(conf)
        fisher = estimate.fisher
    else:
        raise ConfigurationError(
            f'model must be one of {MODELS}, got {conf.model}')

    if conf.partition is not None:
        partition = Partition.of(fisher, _container(conf.partition))
    elif partition is None:
        partition = Partition.singletons(fisher)

    logging.info(
        f'{conf.model}: {fisher.dim} parameters, blocks '
        f'{list(partition.names)}')
    return Problem(fisher, partition, conf.model, lmm, sine, estimate)
