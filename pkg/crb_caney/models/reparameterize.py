from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np
import scipy.linalg as la

from ..errors import DimensionMismatch, SingularJacobian
from ..fim.core import FisherMatrix, make_fisher
from ..fim.numeric import DEFAULT_STEP, finite_difference_jacobian

__all__ = ["Jacobian", "reparameterize", "MAX_CONDITION"]

# beyond this the Jacobian is treated as singular
MAX_CONDITION = 1.0 / np.finfo(np.float64).eps


@dataclass(frozen=True, eq=False)
class Jacobian:
    """
    d g / d theta of an invertible map theta -> g(theta); rows follow
    out_labels and columns follow in_labels.
    """

    matrix: np.ndarray
    in_labels: Tuple[str, ...]
    out_labels: Tuple[str, ...]

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionMismatch(
                f'Jacobian must be square, got {matrix.shape}')
        if len(self.in_labels) != matrix.shape[1] or \
                len(self.out_labels) != matrix.shape[0]:
            raise DimensionMismatch(
                'Jacobian labels do not match its dimensions')
        condition = np.linalg.cond(matrix) if np.all(np.isfinite(matrix)) \
            else np.inf
        if not condition < MAX_CONDITION:
            raise SingularJacobian(
                f'Jacobian is singular (condition {condition:.3g})')
        matrix.setflags(write=False)
        object.__setattr__(self, 'matrix', matrix)
        object.__setattr__(self, 'in_labels', tuple(self.in_labels))
        object.__setattr__(self, 'out_labels', tuple(self.out_labels))

    @classmethod
    def identity(cls, labels: Sequence[str]) -> 'Jacobian':
        return cls(np.eye(len(labels)), tuple(labels), tuple(labels))

    @classmethod
    def from_function(
                cls,
                func: Callable[[np.ndarray], np.ndarray],
                theta: Sequence[float],
                in_labels: Sequence[str],
                out_labels: Sequence[str],
                step: float = DEFAULT_STEP
            ) -> 'Jacobian':
        """
        Central-difference Jacobian of a parameter map.
        """
        matrix = finite_difference_jacobian(
            func, np.asarray(theta, dtype=np.float64), step)
        return cls(matrix, tuple(in_labels), tuple(out_labels))

    def compose(self, inner: 'Jacobian') -> 'Jacobian':
        """
        Jacobian of self after inner (chain rule, self @ inner).
        """
        if inner.out_labels != self.in_labels:
            raise DimensionMismatch(
                f'Cannot compose: {inner.out_labels} != {self.in_labels}')
        return Jacobian(
            self.matrix @ inner.matrix, inner.in_labels, self.out_labels)

    def inverse(self) -> 'Jacobian':
        return Jacobian(
            la.inv(self.matrix), self.out_labels, self.in_labels)


def reparameterize(fisher: FisherMatrix, jacobian: Jacobian) -> FisherMatrix:
    """
    Fisher matrix of g(theta): J_g = G^{-T} J G^{-1}, equivalently
    J_g^{-1} = G J^{-1} G^T.
    Args:
        fisher (FisherMatrix): information about theta
        jacobian (Jacobian): dg/dtheta with in_labels matching J
    Returns:
        FisherMatrix labeled with the Jacobian's out_labels
    """
    if jacobian.in_labels != fisher.labels:
        if sorted(jacobian.in_labels) != sorted(fisher.labels):
            raise DimensionMismatch(
                f'Jacobian inputs {list(jacobian.in_labels)} do not match '
                f'{list(fisher.labels)}')
        fisher = fisher.permute(jacobian.in_labels)

    g = jacobian.matrix
    left = la.solve(g.T, fisher.entries)
    entries = la.solve(g.T, left.T).T
    return make_fisher(
        0.5 * (entries + entries.T), jacobian.out_labels, fisher.bayesian)
