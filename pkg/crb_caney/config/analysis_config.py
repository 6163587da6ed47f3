from typing import Any, Dict, List, Optional
from dataclasses import dataclass, field


@dataclass
class LmmConfig:
    """
    Linear mixed model y = A x + B z + w (embedded with OmegaConf).
    """

    # row-major (n, k_x) and (n, k_z) regressors
    A: List[List[float]] = field(default_factory=lambda: [])
    B: List[List[float]] = field(default_factory=lambda: [])

    # noise variance
    v: float = 1.0

    # true parameter values used by the Monte Carlo experiment
    x: Optional[List[float]] = None
    z: Optional[List[float]] = None


@dataclass
class SineConfig:
    """
    Sine-wave model A cos(omega k) + B sin(omega k) + C.
    """

    A: float = 0.0
    B: float = 1.0
    C: float = 0.0

    # angular frequency in radians per sample, inside (0, pi)
    omega: float = 0.9424777960769379

    v: float = 0.01
    n: int = 1024

    # 'in-phase-quadrature' (A, B) or 'amplitude-phase' (alpha, phi)
    parameterization: str = "in-phase-quadrature"

    # 'dominant' leading-order matrix or 'exact' finite-n matrix
    fim: str = "dominant"


@dataclass
class LoglikConfig:
    """
    Named built-in log-likelihood test models.
    """

    # 'gaussian-mean' or 'linear-mixed'
    name: str = "gaussian-mean"

    # 'score' (mc_score_fim) or 'hessian' (fd_hessian_fim)
    estimator: str = "score"

    # true parameter vector, model default when None
    theta: Optional[List[float]] = None

    # gaussian-mean sample count and variance
    n: int = 10
    v: float = 1.0

    # relative finite-difference step
    step: float = 1e-5


@dataclass
class RequestConfig:
    """
    One analysis request executed by `crb run`.
    """

    # joint, marginal, conditional, chain, bayes, independence,
    # mc-experiment
    kind: str = "marginal"

    interest: Optional[str] = None
    other: Optional[str] = None
    known: List[str] = field(default_factory=lambda: [])
    blocks: List[str] = field(default_factory=lambda: [])
    order: List[str] = field(default_factory=lambda: [])
    tol: float = 1e-10


@dataclass
class AnalysisConfig:
    """
    Analysis configuration class (embedded with OmegaConf).
    """

    # matrix, lmm, sine or custom-loglik
    model: str = "matrix"

    # explicit Fisher matrix for model 'matrix'
    labels: Optional[List[str]] = None
    matrix: Optional[List[List[float]]] = None

    # tag the matrix as a Bayesian (posterior) information matrix
    bayesian: bool = False

    # named blocks, indices or parameter labels; singletons when None
    partition: Optional[Dict[str, List[Any]]] = None

    lmm: LmmConfig = field(default_factory=LmmConfig)
    sine: SineConfig = field(default_factory=SineConfig)
    loglik: LoglikConfig = field(default_factory=LoglikConfig)

    requests: List[RequestConfig] = field(default_factory=lambda: [])

    # report format, text, json or csv
    output: str = "text"

    # seed to control the randomization
    seed: int = 0

    # Monte Carlo trials, experiment default when None
    trials: Optional[int] = None

    # threads for Monte Carlo chunks
    workers: int = 1

    # multiplicative slack for Attains / Respects / Violates
    slack: Optional[float] = None
