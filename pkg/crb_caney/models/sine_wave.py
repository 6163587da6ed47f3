"""
Sine-wave fitting: y(k) = A cos(omega k) + B sin(omega k) + C + w(k),
k = 0, ..., n - 1, w white Gaussian with variance v.

A = alpha sin(phi), B = alpha cos(phi) relate the in-phase/quadrature
amplitudes to the amplitude/phase form alpha sin(omega k + phi).
"""
import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from ..errors import ConfigurationError
from ..fim.core import FisherMatrix, Partition, make_fisher
from ..fim.numeric import AdditiveGaussianModel
from .reparameterize import Jacobian

__all__ = [
    "SineSpec", "SINE_LABELS", "AMPLITUDE_PHASE_LABELS",
    "sine_fisher_dominant", "sine_inflation_factors", "sine_crb_omega",
    "sine_signal", "sine_gradient", "sine_model", "amplitude_phase_jacobian"
]

SINE_LABELS = ('A', 'B', 'C', 'omega', 'v')
AMPLITUDE_PHASE_LABELS = ('alpha', 'phi', 'C', 'omega', 'v')


@dataclass(frozen=True)
class SineSpec:
    """
    Sinusoid parameters, omega in radians per sample.
    """

    A: float
    B: float
    C: float
    omega: float
    v: float
    n: int

    def __post_init__(self):
        if not self.A ** 2 + self.B ** 2 > 0:
            raise ConfigurationError('A^2 + B^2 must be positive')
        if not 0.0 < self.omega < math.pi:
            raise ConfigurationError(
                f'omega must lie in (0, pi), got {self.omega}')
        if not self.v > 0:
            raise ConfigurationError(f'Noise variance must be > 0: {self.v}')
        if int(self.n) != self.n or self.n < 8:
            raise ConfigurationError(f'n must be an integer >= 8: {self.n}')
        object.__setattr__(self, 'n', int(self.n))

    @classmethod
    def from_amplitude_phase(
                cls, alpha: float, phi: float, C: float, omega: float,
                v: float, n: int
            ) -> 'SineSpec':
        return cls(alpha * math.sin(phi), alpha * math.cos(phi), C, omega,
                   v, n)

    @property
    def alpha(self) -> float:
        return math.hypot(self.A, self.B)

    @property
    def phi(self) -> float:
        return math.atan2(self.A, self.B)

    @property
    def power(self) -> float:
        return self.A ** 2 + self.B ** 2

    @property
    def theta(self) -> np.ndarray:
        """
        Signal parameters (A, B, C, omega).
        """
        return np.array([self.A, self.B, self.C, self.omega])


def sine_fisher_dominant(spec: SineSpec) -> Tuple[FisherMatrix, Partition]:
    """
    Leading-order-in-n Fisher matrix over (A, B, C, omega, v).
    Args:
        spec (SineSpec): sinusoid parameters
    Returns:
        FisherMatrix, singleton Partition
    """
    a, b, v, n = spec.A, spec.B, spec.v, float(spec.n)
    entries = np.array([
        [n, 0.0, 0.0, -b * n ** 2 / 2.0, 0.0],
        [0.0, n, 0.0, a * n ** 2 / 2.0, 0.0],
        [0.0, 0.0, 2.0 * n, 0.0, 0.0],
        [-b * n ** 2 / 2.0, a * n ** 2 / 2.0, 0.0, spec.power * n ** 3 / 3.0,
         0.0],
        [0.0, 0.0, 0.0, 0.0, n / v],
    ]) / (2.0 * v)
    fisher = make_fisher(entries, SINE_LABELS)
    return fisher, Partition.singletons(fisher)


def sine_inflation_factors(spec: SineSpec) -> Dict[str, float]:
    """
    Closed-form inflation of the A, B and C bounds from not knowing omega.
    """
    return {
        'A': 1.0 + 3.0 * spec.B ** 2 / spec.power,
        'B': 1.0 + 3.0 * spec.A ** 2 / spec.power,
        'C': 1.0,
    }


def sine_crb_omega(spec: SineSpec) -> Dict[str, float]:
    """
    Closed-form CRB(omega) and CRB(omega | A) under the dominant matrix.
    """
    scale = 2.0 * spec.v / spec.n ** 3
    return {
        'omega': scale * 12.0 / spec.power,
        'omega|A': scale * 12.0 / (spec.power + 3.0 * spec.B ** 2),
    }


def sine_signal(theta: np.ndarray, n: int) -> np.ndarray:
    a, b, c, omega = theta
    k = np.arange(n)
    return a * np.cos(omega * k) + b * np.sin(omega * k) + c


def sine_gradient(theta: np.ndarray, n: int) -> np.ndarray:
    """
    (n, 4) Jacobian of the signal with respect to (A, B, C, omega).
    """
    a, b, _, omega = theta
    k = np.arange(n)
    cos, sin = np.cos(omega * k), np.sin(omega * k)
    return np.column_stack([
        cos, sin, np.ones(n), k * (b * cos - a * sin)
    ])


def sine_model(spec: SineSpec) -> AdditiveGaussianModel:
    """
    Exact finite-n model over theta = (A, B, C, omega).
    """
    n = spec.n
    return AdditiveGaussianModel(
        signal=lambda theta: sine_signal(theta, n),
        v=spec.v,
        theta_labels=SINE_LABELS[:4],
        signal_gradient=lambda theta: sine_gradient(theta, n),
        name='sine-wave',
    )


def amplitude_phase_jacobian(
            spec: SineSpec,
            include_v: bool = True
        ) -> Jacobian:
    """
    Jacobian of (A, B, ...) -> (alpha, phi, ...) at the given SineSpec.
    Args:
        spec (SineSpec): point of evaluation
        include_v (bool): include the noise variance coordinate
    Returns:
        Jacobian
    """
    size = 5 if include_v else 4
    sin, cos, alpha = math.sin(spec.phi), math.cos(spec.phi), spec.alpha
    matrix = np.eye(size)
    matrix[:2, :2] = [[sin, cos], [cos / alpha, -sin / alpha]]
    return Jacobian(
        matrix, SINE_LABELS[:size], AMPLITUDE_PHASE_LABELS[:size])
