import math
import pytest
import numpy as np
from crb_caney.errors import ConfigurationError, DimensionMismatch
from crb_caney.fim.core import CrbValue, Partition, crb_conditional, \
    crb_joint
from crb_caney.fim.numeric import gaussian_fim
from crb_caney.models.linear_mixed import LmmSpec, lmm_fisher
from crb_caney.models.sine_wave import SineSpec, sine_model, sine_signal
from crb_caney.validate.experiments import (
    EmpiricalMse, Verdict, compare, fit_sine, run_lmm_experiment,
    run_sine_experiment, validate_lmm, validate_sine
)

__all__ = [
    "test_compare", "test_empirical_mse", "test_lmm_joint_attains",
    "test_validate_lmm_inflation", "test_lmm_deterministic",
    "test_fit_sine_noiseless", "test_validate_sine",
    "test_experiment_arguments", "test_orthogonal_lmm_no_inflation",
    "test_sine_omega_known_near_bound"
]

WORKED = LmmSpec([1.0, 0.0, 0.0], [1.0, 1.0, 0.0], v=1.0)


@pytest.mark.parametrize(
    "variance, expected",
    [
        (1.0, Verdict.ATTAINS),
        (1.04, Verdict.ATTAINS),
        (0.97, Verdict.ATTAINS),
        (1.2, Verdict.RESPECTS),
        (0.8, Verdict.VIOLATES),
    ]
)
def test_compare(variance, expected):
    mse = EmpiricalMse(np.array([[variance]]), ('p',), 1000, 0, 'test')
    bound = CrbValue(0.0, ('p',), (), 1)
    assert compare(mse, bound, 0.05) == expected


def test_compare_arguments():
    mse = EmpiricalMse(np.eye(2), ('p', 'q'), 1000, 0, 'test')
    with pytest.raises(DimensionMismatch):
        compare(mse, CrbValue(0.0, ('p',), (), 1), 0.05)
    with pytest.raises(ConfigurationError):
        compare(mse, CrbValue(0.0, ('p', 'q'), (), 2), -0.1)


def test_empirical_mse():
    mse = EmpiricalMse(
        np.array([[2.0, 0.5], [0.5, 1.0]]), ('p', 'q'), 5000, 3, 'test')
    assert mse.log_gen_variance == pytest.approx(math.log(1.75))
    assert mse.log_gen_variance_se == pytest.approx(math.sqrt(4.0 / 5000))
    assert mse.variance('q') == 1.0
    block = mse.block(['q'])
    assert block.labels == ('q',)
    assert block.log_gen_variance == pytest.approx(0.0)
    with pytest.raises(DimensionMismatch):
        mse.block(['r'])


def test_lmm_joint_attains():
    fisher, partition = lmm_fisher(WORKED)
    mse = run_lmm_experiment(WORKED, ([0.5], [-1.0]), 100000, seed=1)
    assert mse.labels == ('x_0', 'z_0')
    bound = crb_joint(fisher, partition, ['x', 'z'])
    assert compare(mse, bound, 0.05) == Verdict.ATTAINS
    assert mse.variance('x_0') == pytest.approx(2.0, rel=0.05)


def test_validate_lmm_inflation():
    study = validate_lmm(WORKED, trials=100000, seed=5)
    assert not study.violated
    assert [report.verdict for report in study.reports] == \
        [Verdict.ATTAINS, Verdict.ATTAINS]
    empirical, predicted = study.inflation['x']
    assert predicted == pytest.approx(2.0, abs=1e-10)
    assert empirical == pytest.approx(2.0, rel=0.05)


def test_lmm_deterministic():
    spec = LmmSpec(
        np.array([[1.0], [0.5], [2.0], [0.0]]),
        np.array([[0.0], [1.0], [1.0], [1.0]]), v=0.3)
    first = run_lmm_experiment(spec, trials=3000, seed=9, chunk_size=400)
    second = run_lmm_experiment(
        spec, trials=3000, seed=9, chunk_size=400, workers=3)
    assert np.array_equal(first.matrix, second.matrix)


def test_fit_sine_noiseless():
    spec = SineSpec(0.4, -0.9, 0.25, 0.3 * math.pi, 0.01, 256)
    estimate = fit_sine(sine_signal(spec.theta, spec.n))
    assert np.allclose(estimate, spec.theta, atol=1e-8)


def test_validate_sine():
    spec = SineSpec(0.0, 1.0, 0.0, 0.3 * math.pi, 0.01, 1024)
    study = validate_sine(spec, trials=2000, seed=0)
    assert not study.violated
    assert 3.4 <= study.inflation['A'][0] <= 4.6
    assert study.inflation['A'][1] == pytest.approx(4.0)
    assert 0.9 <= study.inflation['C'][0] <= 1.1
    assert all(report.mse.discarded <= 20 for report in study.reports)

    again = run_sine_experiment(spec, trials=500, seed=0, mode='omega_known')
    repeat = run_sine_experiment(
        spec, trials=500, seed=0, mode='omega_known', workers=2)
    assert np.array_equal(again.matrix, repeat.matrix)


def test_experiment_arguments():
    with pytest.raises(ConfigurationError):
        run_lmm_experiment(WORKED, trials=10)
    with pytest.raises(ConfigurationError):
        run_lmm_experiment(WORKED, trials=1000, mode='other')
    with pytest.raises(ConfigurationError):
        run_sine_experiment(
            SineSpec(0.0, 1.0, 0.0, 1.0, 0.01, 32), trials=100)
    with pytest.raises(ConfigurationError):
        run_sine_experiment(
            SineSpec(0.0, 1.0, 0.0, 0.01, 0.01, 128), trials=100)


def test_orthogonal_lmm_no_inflation():
    spec = LmmSpec(
        np.array([[1.0], [0.0], [0.0], [1.0]]),
        np.array([[0.0], [1.0], [1.0], [0.0]]), v=0.5)
    study = validate_lmm(spec, trials=20000, seed=4)
    empirical, predicted = study.inflation['x']
    assert predicted == 1.0
    assert empirical == pytest.approx(1.0, rel=0.02)


def test_sine_omega_known_near_bound():
    spec = SineSpec(0.6, -0.8, 0.2, 0.3 * math.pi, 0.01, 1024)
    fisher = gaussian_fim(sine_model(spec), spec.theta, include_v=True)
    bound = crb_conditional(
        fisher, Partition.singletons(fisher), ['A', 'B', 'C'],
        ['omega', 'v'])
    mse = run_sine_experiment(spec, trials=20000, seed=0, mode='omega_known')
    ratio = math.exp(mse.log_gen_variance - bound.log_value)
    assert 0.9 <= ratio <= 1.1
