"""
Block-partitioned Fisher information algebra.

Every bound is a determinant kept in log-space. With the parameters split
into blocks, a block (or union of blocks) of interest has

    CRB(a | known) = |S^{-1}|,  S = J_a - J_ar J_r^{-1} J_ra

where the known blocks are deleted from J first and r collects every
remaining (unknown) parameter, including parameters that no block covers.
The chain rule and the Bayes rule analogs follow from the Schur
determinant formula and are exposed as `chain_decompose` and
`bayes_factor`.
"""
import math
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, NamedTuple, Sequence, Tuple, \
    Union

import numpy as np
import pandas as pd
import scipy.linalg as la

from ..errors import (
    NumericalError, NotSymmetric, DimensionMismatch, EmptyComplement,
    InvalidOrder, InvalidPartition
)
from ..utils.linalg import cholesky, logdet, chol_logdet

__all__ = [
    "FisherMatrix", "Partition", "CrbValue", "BayesDecomposition",
    "make_fisher", "schur_complement", "crb_joint", "crb_conditional",
    "crb_marginal", "chain_decompose", "bayes_factor",
    "independence_check", "border", "SYMMETRY_TOLERANCE"
]

SYMMETRY_TOLERANCE = 1e-10

BlockNames = Union[str, Sequence[str]]


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class FisherMatrix:
    """
    Labeled symmetric positive definite information matrix.
    Construction symmetrizes entries that are symmetric within
    SYMMETRY_TOLERANCE and rejects anything that fails Cholesky.
    """

    entries: np.ndarray
    labels: Tuple[str, ...]

    # tags a Bayesian (posterior) information matrix, same algebra applies
    bayesian: bool = False

    _chol: np.ndarray = field(default=None, init=False, repr=False)

    def __post_init__(self):
        try:
            entries = np.array(self.entries, dtype=np.float64)
        except (TypeError, ValueError) as err:
            raise DimensionMismatch(
                f'Fisher matrix is not a rectangular real array: {err}')
        labels = tuple(str(label) for label in self.labels)

        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DimensionMismatch(
                f'Fisher matrix must be square, got shape {entries.shape}')
        if len(labels) != entries.shape[0]:
            raise DimensionMismatch(
                f'{len(labels)} labels for a {entries.shape[0]}x'
                f'{entries.shape[0]} matrix')
        if len(set(labels)) != len(labels):
            raise DimensionMismatch(f'Duplicate parameter labels {labels}')
        if not np.all(np.isfinite(entries)):
            raise NumericalError('Fisher matrix has non-finite entries')

        scale = max(float(np.max(np.abs(entries), initial=0.0)), 1e-300)
        asymmetry = float(np.max(np.abs(entries - entries.T), initial=0.0))
        if asymmetry > SYMMETRY_TOLERANCE * scale:
            raise NotSymmetric(
                f'Fisher matrix asymmetry {asymmetry:.3g} exceeds '
                f'{SYMMETRY_TOLERANCE:g} relative to {scale:.3g}')
        entries = 0.5 * (entries + entries.T)

        chol = cholesky(entries, quantity='J[' + ','.join(labels) + ']')
        entries.setflags(write=False)
        chol.setflags(write=False)

        object.__setattr__(self, 'entries', entries)
        object.__setattr__(self, 'labels', labels)
        object.__setattr__(self, '_chol', chol)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise InvalidPartition(
                f'{label} not in parameter labels {list(self.labels)}')

    def logdet(self) -> float:
        return logdet(self._chol)

    def condition_number(self) -> float:
        """
        2-norm condition number, lets callers skip pathological draws.
        """
        return float(np.linalg.cond(self.entries))

    def submatrix(self, labels: Sequence[str]) -> 'FisherMatrix':
        idx = [self.index_of(label) for label in labels]
        return FisherMatrix(
            self.entries[np.ix_(idx, idx)], tuple(labels), self.bayesian)

    def permute(self, labels: Sequence[str]) -> 'FisherMatrix':
        """
        Reorder the parameters, labels must be a permutation.
        """
        if sorted(labels) != sorted(self.labels):
            raise InvalidOrder(
                f'{list(labels)} is not a permutation of {list(self.labels)}')
        return self.submatrix(labels)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            np.array(self.entries), index=self.labels, columns=self.labels)


def _index(member: Any, block: str) -> int:
    """
    Integral parameter index, bools and fractional values rejected.
    """
    if isinstance(member, (bool, np.bool_)):
        raise InvalidPartition(f'Block {block}: {member!r} is not an index')
    if isinstance(member, (int, np.integer)):
        return int(member)
    if isinstance(member, (float, np.floating)) and \
            float(member).is_integer():
        return int(member)
    raise InvalidPartition(f'Block {block}: {member!r} is not an index')


@dataclass(frozen=True)
class Partition:
    """
    Ordered, disjoint, non-empty index blocks over a Fisher matrix.
    Indices need not be contiguous and need not cover every parameter.
    """

    blocks: Tuple[Tuple[str, Tuple[int, ...]], ...]

    def __post_init__(self):
        blocks = tuple(
            (str(name), tuple(_index(i, name) for i in idx))
            for name, idx in self.blocks)
        names = [name for name, _ in blocks]
        if len(set(names)) != len(names):
            raise InvalidPartition(f'Duplicate block names {names}')
        seen = set()
        for name, idx in blocks:
            if len(idx) == 0:
                raise InvalidPartition(f'Block {name} is empty')
            if min(idx) < 0:
                raise InvalidPartition(f'Block {name} has negative indices')
            if seen.intersection(idx) or len(set(idx)) != len(idx):
                raise InvalidPartition(f'Block {name} overlaps another block')
            seen.update(idx)
        object.__setattr__(self, 'blocks', blocks)

    @classmethod
    def from_mapping(
                cls,
                mapping: Mapping[str, Sequence[Union[int, str]]],
                labels: Sequence[str] = None
            ) -> 'Partition':
        """
        Build a partition from {name: [indices or labels]}.
        Args:
            mapping (Mapping): block name to indices or parameter labels
            labels (Sequence[str]): parameter labels used to resolve names
        Returns:
            Partition
        """
        blocks = []
        for name, members in mapping.items():
            idx = []
            for member in members:
                if not isinstance(member, str):
                    idx.append(_index(member, name))
                    continue
                if member.lstrip('-').isdigit():
                    idx.append(int(member))
                    continue
                if labels is None or member not in labels:
                    raise InvalidPartition(
                        f'Block {name}: unknown parameter {member}')
                idx.append(list(labels).index(member))
            blocks.append((name, tuple(idx)))
        return cls(tuple(blocks))

    @classmethod
    def of(cls, fisher: FisherMatrix,
           mapping: Mapping[str, Sequence[Union[int, str]]]) -> 'Partition':
        partition = cls.from_mapping(mapping, fisher.labels)
        partition.check(fisher.dim)
        return partition

    @classmethod
    def singletons(cls, fisher: FisherMatrix) -> 'Partition':
        """
        One block per parameter, named after the parameter label.
        """
        return cls(tuple(
            (label, (i,)) for i, label in enumerate(fisher.labels)))

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.blocks)

    def as_dict(self) -> Dict[str, List[int]]:
        return {name: list(idx) for name, idx in self.blocks}

    def indices(self, name: str) -> Tuple[int, ...]:
        for block_name, idx in self.blocks:
            if block_name == name:
                return idx
        raise InvalidPartition(f'{name} is not a block of {list(self.names)}')

    def union(self, names: BlockNames) -> List[int]:
        names = _as_names(names)
        if len(set(names)) != len(names):
            raise InvalidPartition(f'Block names repeated in {list(names)}')
        idx = []
        for name in names:
            idx.extend(self.indices(name))
        return sorted(idx)

    def check(self, dim: int) -> None:
        for name, idx in self.blocks:
            if max(idx) >= dim:
                raise InvalidPartition(
                    f'Block {name} index {max(idx)} out of range for '
                    f'{dim} parameters')


@dataclass(frozen=True)
class CrbValue:
    """
    Cramer-Rao bound determinant stored as its natural log.
    """

    log_value: float

    # blocks of interest and blocks treated as known
    interest: Tuple[str, ...]
    known: Tuple[str, ...] = ()

    # number of scalar parameters the bound covers
    dim: int = 0
    bayesian: bool = False

    def __post_init__(self):
        if not math.isfinite(self.log_value):
            raise NumericalError(
                f'Non-finite log CRB for {self.interest}: {self.log_value}')
        object.__setattr__(self, 'interest', tuple(self.interest))
        object.__setattr__(self, 'known', tuple(self.known))

    def value(self) -> float:
        """
        Linear-space view, inf when exp overflows.
        """
        try:
            return math.exp(self.log_value)
        except OverflowError:
            return math.inf

    @property
    def name(self) -> str:
        prefix = 'PCRB' if self.bayesian else 'CRB'
        text = ','.join(self.interest)
        if self.known:
            text += '|' + ','.join(self.known)
        return f'{prefix}({text})'


class BayesDecomposition(NamedTuple):
    """
    CRB(a) = factor * CRB(a|b) with factor = CRB(b) / CRB(b|a).
    """
    factor: float
    lhs: CrbValue
    rhs_product: CrbValue


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------
def make_fisher(
            entries: Union[np.ndarray, Sequence[Sequence[float]]],
            labels: Sequence[str],
            bayesian: bool = False
        ) -> FisherMatrix:
    """
    Validate a square matrix as a Fisher information matrix.
    Args:
        entries (array-like): square real matrix
        labels (Sequence[str]): unique parameter names
        bayesian (bool): tag the matrix as a Bayesian information matrix
    Returns:
        FisherMatrix
    """
    return FisherMatrix(entries, tuple(labels), bayesian)


def _as_names(names: BlockNames) -> Tuple[str, ...]:
    if isinstance(names, str):
        return (names,)
    return tuple(names)


def _labels(fisher: FisherMatrix, idx: Sequence[int]) -> str:
    return ','.join(fisher.labels[i] for i in idx)


def _effective_information(
            fisher: FisherMatrix,
            interest: Sequence[int],
            known: Sequence[int]
        ) -> np.ndarray:
    """
    Schur complement of the interest indices once the known indices are
    deleted and every other index is eliminated as unknown.
    """
    excluded = set(interest) | set(known)
    rest = [i for i in range(fisher.dim) if i not in excluded]
    j_aa = fisher.entries[np.ix_(interest, interest)]
    if not rest:
        return np.array(j_aa)

    j_ar = fisher.entries[np.ix_(interest, rest)]
    j_rr = fisher.entries[np.ix_(rest, rest)]
    chol = cholesky(j_rr, quantity=f'J[{_labels(fisher, rest)}]')
    schur = j_aa - j_ar @ la.cho_solve((chol, True), j_ar.T)
    return 0.5 * (schur + schur.T)


def schur_complement(
            fisher: FisherMatrix,
            partition: Partition,
            keep: str
        ) -> np.ndarray:
    """
    J_a - J_ab J_b^{-1} J_ba for the kept block a, b being every other
    parameter of J.
    Args:
        fisher (FisherMatrix): information matrix
        partition (Partition): block partition
        keep (str): name of the kept block
    Returns:
        symmetric positive definite np.ndarray
    """
    partition.check(fisher.dim)
    interest = list(partition.indices(keep))
    if len(interest) == fisher.dim:
        raise EmptyComplement(
            f'Block {keep} covers every parameter, use the plain block')
    return _effective_information(fisher, interest, [])


def crb_joint(
            fisher: FisherMatrix,
            partition: Partition,
            blocks: BlockNames
        ) -> CrbValue:
    """
    Joint CRB of the named blocks, all remaining parameters unknown.
    """
    names = _as_names(blocks)
    if not names:
        raise InvalidPartition('crb_joint needs at least one block')
    partition.check(fisher.dim)
    interest = partition.union(names)
    if len(interest) == fisher.dim:
        log_value = -fisher.logdet()
    else:
        info = _effective_information(fisher, interest, [])
        log_value = -chol_logdet(
            info, quantity=f'Schur complement for {",".join(names)}')
    return CrbValue(log_value, names, (), len(interest), fisher.bayesian)


def crb_conditional(
            fisher: FisherMatrix,
            partition: Partition,
            interest: BlockNames,
            known: Sequence[str] = ()
        ) -> CrbValue:
    """
    CRB of the interest blocks with the known blocks removed from the
    unknown set; blocks that are neither stay unknown and are eliminated.
    Args:
        fisher (FisherMatrix): information matrix
        partition (Partition): block partition
        interest (str or Sequence[str]): block(s) of interest
        known (Sequence[str]): blocks treated as known
    Returns:
        CrbValue
    """
    interest_names = _as_names(interest)
    known_names = _as_names(known)
    if not interest_names:
        raise InvalidPartition('No block of interest given')
    overlap = set(interest_names) & set(known_names)
    if overlap:
        raise InvalidPartition(
            f'Blocks {sorted(overlap)} are both of interest and known')
    partition.check(fisher.dim)

    interest_idx = partition.union(interest_names)
    known_idx = partition.union(known_names)
    info = _effective_information(fisher, interest_idx, known_idx)
    log_value = -chol_logdet(
        info, quantity=f'Schur complement for {",".join(interest_names)}')
    return CrbValue(
        log_value, interest_names, known_names, len(interest_idx),
        fisher.bayesian)


def crb_marginal(
            fisher: FisherMatrix,
            partition: Partition,
            interest: BlockNames
        ) -> CrbValue:
    """
    CRB of the interest block(s) with every other parameter unknown,
    |(J_a - J_ab J_b^{-1} J_ba)^{-1}|.
    """
    return crb_conditional(fisher, partition, interest, ())


def chain_decompose(
            fisher: FisherMatrix,
            partition: Partition,
            order: Sequence[str]
        ) -> List[Tuple[str, CrbValue]]:
    """
    Recursive chain-rule factorization
    CRB(b1, ..., bm) = prod_i CRB(b_i | b_{i+1}, ..., b_m).
    Args:
        fisher (FisherMatrix): information matrix
        partition (Partition): block partition
        order (Sequence[str]): permutation of the partition blocks
    Returns:
        list of (block name, conditional CrbValue)
    """
    order = list(order)
    if len(set(order)) != len(order) or \
            sorted(order) != sorted(partition.names):
        raise InvalidOrder(
            f'{order} is not a permutation of {list(partition.names)}')

    factors = []
    for position, name in enumerate(order):
        factor = crb_conditional(
            fisher, partition, name, order[position + 1:])
        logging.debug(f'{factor.name}: log {factor.log_value:.12g}')
        factors.append((name, factor))
    return factors


def bayes_factor(
            fisher: FisherMatrix,
            partition: Partition,
            interest: str,
            other: str
        ) -> BayesDecomposition:
    """
    Inflation of the interest block's bound caused by not knowing the
    other block, CRB(b) / CRB(b|a), computed in log-space.
    Args:
        fisher (FisherMatrix): information matrix
        partition (Partition): block partition
        interest (str): block a
        other (str): block b
    Returns:
        BayesDecomposition(factor, CRB(a), CRB(a|b) * factor)
    """
    if interest == other:
        raise InvalidPartition('interest and other must differ')

    other_marginal = crb_marginal(fisher, partition, other)
    other_given = crb_conditional(fisher, partition, other, [interest])
    log_factor = other_marginal.log_value - other_given.log_value

    lhs = crb_marginal(fisher, partition, interest)
    conditional = crb_conditional(fisher, partition, interest, [other])
    rhs_product = CrbValue(
        conditional.log_value + log_factor, (interest,), (),
        conditional.dim, fisher.bayesian)
    return BayesDecomposition(math.exp(log_factor), lhs, rhs_product)


def independence_check(
            fisher: FisherMatrix,
            partition: Partition,
            a: BlockNames,
            b: BlockNames,
            tol: float = 1e-10
        ) -> bool:
    """
    True when the cross block J_ab vanishes relative to the diagonal,
    max |J_ij| / sqrt(J_ii J_jj) <= tol.
    """
    a_idx = partition.union(a)
    b_idx = partition.union(b)
    if set(a_idx) & set(b_idx):
        raise InvalidPartition('independence_check needs distinct blocks')
    partition.check(fisher.dim)

    diagonal = np.sqrt(np.diagonal(fisher.entries))
    cross = fisher.entries[np.ix_(a_idx, b_idx)]
    scaled = np.abs(cross) / np.outer(diagonal[a_idx], diagonal[b_idx])
    return bool(np.max(scaled) <= tol)


def border(
            fisher: FisherMatrix,
            coupling: np.ndarray,
            corner: np.ndarray,
            labels: Sequence[str]
        ) -> FisherMatrix:
    """
    Append a parameter block: [[J, C], [C^T, D]].
    Args:
        fisher (FisherMatrix): information matrix
        coupling (np.ndarray): (k, m) cross information C
        corner (np.ndarray): (m, m) information D of the new block
        labels (Sequence[str]): labels of the new parameters
    Returns:
        FisherMatrix of size k + m
    """
    coupling = np.atleast_2d(np.asarray(coupling, dtype=np.float64))
    if coupling.shape[0] != fisher.dim:
        coupling = coupling.reshape(fisher.dim, -1)
    corner = np.atleast_2d(np.asarray(corner, dtype=np.float64))
    entries = np.block([[fisher.entries, coupling], [coupling.T, corner]])
    return FisherMatrix(
        entries, fisher.labels + tuple(labels), fisher.bayesian)
