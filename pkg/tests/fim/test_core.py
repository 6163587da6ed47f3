import math
import itertools
import pytest
import numpy as np
from crb_caney.errors import (
    DimensionMismatch, EmptyComplement, InvalidOrder, InvalidPartition,
    NotPositiveDefinite, NotSymmetric
)
from crb_caney.fim.core import (
    Partition, bayes_factor, border, chain_decompose, crb_conditional,
    crb_joint, crb_marginal, independence_check, make_fisher,
    schur_complement
)
from crb_caney.utils.linalg import random_spd

__all__ = [
    "test_make_fisher_rejects", "test_scalar_bounds",
    "test_oracle_equivalence", "test_chain_and_bayes_rules",
    "test_three_block_orders", "test_chain_every_order",
    "test_schur_complement_oracle", "test_bayes_factor_block_diagonal",
    "test_schur_determinant_formula", "test_permutation_invariance",
    "test_bordering_monotonicity", "test_partition_errors",
    "test_partition_rejects_non_integral",
    "test_partition_accepts_integral_values", "test_repeated_block_names",
    "test_independence_check", "test_bayesian_tag"
]


def _labels(k):
    return [f't{i}' for i in range(k)]


def _random_partition(k, rng, blocks):
    order = rng.permutation(k)
    cuts = np.sort(rng.choice(np.arange(1, k), size=blocks - 1,
                              replace=False))
    return Partition.from_mapping({
        f'b{i}': [int(j) for j in part]
        for i, part in enumerate(np.split(order, cuts))
    })


def _brute_force(matrix, interest, known):
    """
    det of the interest block of the inverse once known rows are deleted.
    """
    keep = [i for i in range(matrix.shape[0]) if i not in known]
    inverse = np.linalg.inv(matrix[np.ix_(keep, keep)])
    positions = [keep.index(i) for i in interest]
    return np.linalg.slogdet(inverse[np.ix_(positions, positions)])[1]


@pytest.mark.parametrize(
    "matrix, error",
    [
        ([[1.0, 0.5], [0.4, 1.0]], NotSymmetric),
        ([[1.0, 2.0], [2.0, 1.0]], NotPositiveDefinite),
        ([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], DimensionMismatch),
        ([[1.0, 0.0], [0.0]], DimensionMismatch),
        ([[1.0, "x"], ["x", 1.0]], DimensionMismatch),
    ]
)
def test_make_fisher_rejects(matrix, error):
    with pytest.raises(error):
        make_fisher(matrix, _labels(len(matrix)))


def test_not_positive_definite_names_quantity():
    with pytest.raises(NotPositiveDefinite) as err:
        make_fisher([[1.0, 2.0], [2.0, 1.0]], ['p', 'q'])
    assert err.value.quantity == 'J[p,q]'
    assert err.value.min_eigenvalue == pytest.approx(-1.0)


@pytest.mark.parametrize(
    "rho", [0.0, 0.3, -0.8]
)
def test_scalar_bounds(rho):
    # two parameters with unit information and correlation rho
    fisher = make_fisher([[1.0, rho], [rho, 1.0]], ['a', 'b'])
    partition = Partition.singletons(fisher)
    marginal = crb_marginal(fisher, partition, 'a')
    conditional = crb_conditional(fisher, partition, 'a', ['b'])
    joint = crb_joint(fisher, partition, ['a', 'b'])
    assert marginal.value() == pytest.approx(1.0 / (1.0 - rho ** 2))
    assert conditional.value() == pytest.approx(1.0)
    assert joint.value() == pytest.approx(1.0 / (1.0 - rho ** 2))
    assert marginal.name == 'CRB(a)'
    assert conditional.name == 'CRB(a|b)'


def test_oracle_equivalence():
    rng = np.random.default_rng(2023)
    for _ in range(500):
        k = int(rng.integers(3, 9))
        matrix = random_spd(k, rng, max_condition=1e4)
        fisher = make_fisher(matrix, _labels(k))
        partition = _random_partition(k, rng, 3)
        a, b, c = partition.names

        expected = _brute_force(matrix, partition.union([a, b]), [])
        assert crb_joint(fisher, partition, [a, b]).log_value == \
            pytest.approx(expected, rel=1e-10, abs=1e-9)

        expected = _brute_force(matrix, partition.union(a), [])
        assert crb_marginal(fisher, partition, a).log_value == \
            pytest.approx(expected, rel=1e-10, abs=1e-9)

        expected = _brute_force(
            matrix, partition.union(a), partition.union(b))
        assert crb_conditional(fisher, partition, a, [b]).log_value == \
            pytest.approx(expected, rel=1e-10, abs=1e-9)

        assert crb_joint(fisher, partition, [a, b, c]).log_value == \
            pytest.approx(-np.linalg.slogdet(matrix)[1],
                          rel=1e-10, abs=1e-9)


def test_chain_and_bayes_rules():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        k = int(rng.integers(2, 21))
        fisher = make_fisher(random_spd(k, rng), _labels(k))
        partition = _random_partition(k, rng, 2)
        a, b = partition.names

        factors = chain_decompose(fisher, partition, [a, b])
        joint = crb_joint(fisher, partition, [a, b])
        log_sum = math.fsum(crb.log_value for _, crb in factors)
        assert log_sum == pytest.approx(joint.log_value, rel=1e-8, abs=1e-8)

        decomposition = bayes_factor(fisher, partition, a, b)
        assert decomposition.rhs_product.log_value == pytest.approx(
            decomposition.lhs.log_value, rel=1e-8, abs=1e-8)
        assert decomposition.factor >= 1.0 - 1e-10


def test_three_block_orders():
    rng = np.random.default_rng(1)
    for _ in range(200):
        k = int(rng.integers(3, 16))
        fisher = make_fisher(random_spd(k, rng), _labels(k))
        partition = _random_partition(k, rng, 3)
        a, b, c = partition.names

        forward = chain_decompose(fisher, partition, [a, b, c])
        backward = chain_decompose(fisher, partition, [c, b, a])
        assert [crb.known for _, crb in forward] == [(b, c), (c,), ()]
        assert math.fsum(crb.log_value for _, crb in forward) == \
            pytest.approx(math.fsum(crb.log_value for _, crb in backward),
                          rel=1e-8, abs=1e-8)


def test_bayes_factor_block_diagonal():
    rng = np.random.default_rng(5)
    for _ in range(50):
        first, second = random_spd(3, rng), random_spd(2, rng)
        matrix = np.zeros((5, 5))
        matrix[:3, :3] = first
        matrix[3:, 3:] = second
        fisher = make_fisher(matrix, _labels(5))
        partition = Partition.from_mapping(
            {'a': [0, 1, 2], 'b': [3, 4]})
        assert bayes_factor(fisher, partition, 'a', 'b').factor == 1.0
        assert independence_check(fisher, partition, 'a', 'b')


def test_schur_determinant_formula():
    # |J| = |J_a - J_ab J_b^-1 J_ba| |J_b| with either block kept
    rng = np.random.default_rng(11)
    for k in range(2, 21):
        for _ in range(5):
            fisher = make_fisher(random_spd(k, rng, 1e4), _labels(k))
            partition = _random_partition(k, rng, 2)
            for keep, other in (partition.names, partition.names[::-1]):
                schur = schur_complement(fisher, partition, keep)
                idx = partition.union(other)
                j_other = fisher.entries[np.ix_(idx, idx)]
                assert np.linalg.slogdet(schur)[1] + \
                    np.linalg.slogdet(j_other)[1] == pytest.approx(
                        fisher.logdet(), rel=1e-9, abs=1e-9)


def test_schur_complement_oracle():
    rng = np.random.default_rng(13)
    for _ in range(100):
        k = int(rng.integers(2, 12))
        fisher = make_fisher(random_spd(k, rng, 1e4), _labels(k))
        partition = _random_partition(k, rng, 2)
        keep = partition.names[0]
        idx = partition.union(keep)
        inverse = np.linalg.inv(fisher.entries)
        expected = np.linalg.inv(inverse[np.ix_(idx, idx)])
        assert np.allclose(
            schur_complement(fisher, partition, keep), expected,
            rtol=1e-8, atol=1e-10 * np.max(np.abs(expected)))


def test_chain_every_order():
    rng = np.random.default_rng(19)
    for blocks in range(2, 6):
        for _ in range(5):
            k = int(rng.integers(blocks, 13))
            fisher = make_fisher(random_spd(k, rng, 1e4), _labels(k))
            partition = _random_partition(k, rng, blocks)
            joint = crb_joint(fisher, partition, partition.names)
            for order in itertools.permutations(partition.names):
                factors = chain_decompose(fisher, partition, order)
                total = math.fsum(crb.log_value for _, crb in factors)
                assert total == pytest.approx(
                    joint.log_value, rel=1e-8, abs=1e-8)


def test_permutation_invariance():
    rng = np.random.default_rng(3)
    k = 6
    fisher = make_fisher(random_spd(k, rng), _labels(k))
    permuted = fisher.permute(list(reversed(fisher.labels)))
    mapping = {'x': ['t0', 't3'], 'y': ['t1'], 'z': ['t2', 't5']}
    original = Partition.of(fisher, mapping)
    reordered = Partition.of(permuted, mapping)
    for interest, known in [('x', []), ('x', ['y']), ('z', ['x', 'y'])]:
        expected = crb_conditional(fisher, original, interest, known)
        result = crb_conditional(permuted, reordered, interest, known)
        assert result.log_value == pytest.approx(
            expected.log_value, rel=1e-10, abs=1e-10)


def test_bordering_monotonicity():
    # appending coupled parameters never lowers the bound of old ones
    rng = np.random.default_rng(17)
    for _ in range(100):
        k, m = int(rng.integers(2, 6)), int(rng.integers(1, 4))
        full = random_spd(k + m, rng, 1e4)
        fisher = make_fisher(full[:k, :k], _labels(k))
        bordered = border(fisher, full[:k, k:], full[k:, k:],
                          [f'n{i}' for i in range(m)])
        idx = list(range(k))
        before = crb_joint(
            fisher, Partition.from_mapping({'a': idx}), 'a')
        after = crb_marginal(
            bordered, Partition.from_mapping({'a': idx}), 'a')
        assert after.log_value >= before.log_value - 1e-10


def test_partition_errors():
    fisher = make_fisher(np.eye(3), ['p', 'q', 'r'])
    partition = Partition.singletons(fisher)
    with pytest.raises(InvalidPartition):
        Partition.from_mapping({'a': [0, 1], 'b': [1]})
    with pytest.raises(InvalidPartition):
        Partition.from_mapping({'a': []})
    with pytest.raises(InvalidPartition):
        Partition.of(fisher, {'a': [0, 5]})
    with pytest.raises(InvalidPartition):
        crb_conditional(fisher, partition, 'p', ['p'])
    with pytest.raises(InvalidPartition):
        crb_marginal(fisher, partition, 'missing')
    with pytest.raises(InvalidOrder):
        chain_decompose(fisher, partition, ['p', 'q'])
    with pytest.raises(EmptyComplement):
        schur_complement(
            fisher, Partition.from_mapping({'all': [0, 1, 2]}), 'all')


@pytest.mark.parametrize(
    "member", [0.7, True, None, 1.5, np.float64(0.25)]
)
def test_partition_rejects_non_integral(member):
    with pytest.raises(InvalidPartition):
        Partition.from_mapping({'a': [member], 'b': [2]})
    with pytest.raises(InvalidPartition):
        Partition((('a', (member,)),))


def test_partition_accepts_integral_values():
    partition = Partition.from_mapping(
        {'a': [np.int64(0), 1.0], 'b': ['2']})
    assert partition.as_dict() == {'a': [0, 1], 'b': [2]}


def test_repeated_block_names():
    fisher = make_fisher(np.eye(3), ['p', 'q', 'r'])
    partition = Partition.singletons(fisher)
    with pytest.raises(InvalidPartition):
        crb_joint(fisher, partition, ['p', 'p'])
    with pytest.raises(InvalidPartition):
        crb_conditional(fisher, partition, ['p', 'p'], ['q'])


def test_unpartitioned_parameters_are_nuisance():
    fisher = make_fisher([[2.0, 1.0], [1.0, 2.0]], ['p', 'q'])
    partition = Partition.from_mapping({'p': [0]})
    assert crb_marginal(fisher, partition, 'p').value() == \
        pytest.approx(2.0 / 3.0)


@pytest.mark.parametrize(
    "cross, expected", [(0.0, True), (1e-14, True), (0.1, False)]
)
def test_independence_check(cross, expected):
    fisher = make_fisher(
        [[1.0, cross], [cross, 1.0]], ['p', 'q'])
    partition = Partition.singletons(fisher)
    assert independence_check(fisher, partition, 'p', 'q') is expected


def test_bayesian_tag():
    fisher = make_fisher(np.diag([2.0, 4.0]), ['p', 'q'], bayesian=True)
    crb = crb_marginal(fisher, Partition.singletons(fisher), 'q')
    assert crb.bayesian
    assert crb.name == 'PCRB(q)'
    assert crb.value() == pytest.approx(0.25)
