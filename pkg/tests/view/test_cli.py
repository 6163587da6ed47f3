import json
import math
import pytest
import numpy as np
from crb_caney import cli
from crb_caney.fim.core import CrbValue
from crb_caney.validate.experiments import EmpiricalMse, ExperimentReport, \
    InflationStudy, Verdict

__all__ = [
    "test_bayes_sine_phase", "test_chain_log_sum", "test_lmm_orthogonal",
    "test_exit_codes", "test_json_round_trip", "test_text_matches_json",
    "test_csv_output", "test_run_requests", "test_validate_lmm",
    "test_validate_violates", "test_fim_estimate", "test_sine_factors",
    "test_independence_bayesian"
]


def _json(capsys, argv):
    assert cli.main(argv + ['--output', 'json']) == cli.EXIT_OK
    return json.loads(capsys.readouterr().out)


def _rows(report):
    return {row['quantity']: row for row in report['rows']}


def test_bayes_sine_phase(capsys):
    report = _json(capsys, [
        'bayes', '--model', 'tests/data/sine.json',
        '--interest', 'phi', '--other', 'omega'])
    assert report['command'] == 'bayes'
    assert report['details']['factor'] == pytest.approx(4.0, rel=1e-6)
    assert _rows(report)['factor(phi;omega)']['value'] == \
        pytest.approx(4.0, rel=1e-6)
    assert abs(report['details']['log_rhs_minus_lhs']) < 1e-8


def test_chain_log_sum(capsys):
    report = _json(capsys, [
        'chain', '--matrix', 'tests/data/J.json', '--order', 'beta,alpha'])
    rows = report['rows']
    assert [row['quantity'] for row in rows] == \
        ['CRB(beta|alpha)', 'CRB(alpha)', 'CRB(beta,alpha)']
    assert rows[0]['log_value'] + rows[1]['log_value'] == \
        pytest.approx(rows[2]['log_value'], rel=1e-10, abs=1e-12)
    joint = -np.linalg.slogdet(np.array(
        [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]]))[1]
    assert rows[2]['log_value'] == pytest.approx(joint, rel=1e-12)


def test_lmm_orthogonal(capsys):
    report = _json(capsys, [
        'lmm', '--config', 'tests/data/lmm_orthogonal.json', '--inflation'])
    assert _rows(report)['inflation(x)']['value'] == 1.0

    report = _json(capsys, [
        'lmm', '--config', 'tests/data/lmm.json', '--inflation'])
    rows = _rows(report)
    assert rows['inflation(x)']['value'] == pytest.approx(2.0, abs=1e-10)
    assert rows['CRB(x)']['value'] == pytest.approx(2.0, abs=1e-10)
    assert rows['CRB(x|z)']['value'] == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize(
    "argv, expected",
    [
        (['joint', '--matrix', 'tests/data/not_pd.json'], cli.EXIT_NUMERICAL),
        (['joint', '--matrix', 'tests/data/missing.json'], cli.EXIT_CONFIG),
        (['joint', '--matrix', 'tests/data/ragged.json'], cli.EXIT_CONFIG),
        (['marginal', '--matrix', 'tests/data/fractional_partition.json',
          '--interest', 'a'], cli.EXIT_CONFIG),
        (['joint', '--matrix', 'tests/data/J.json', '--blocks',
          'alpha,alpha'], cli.EXIT_CONFIG),
        (['marginal', '--matrix', 'tests/data/J.json', '--interest',
          'gamma'], cli.EXIT_CONFIG),
        (['chain', '--matrix', 'tests/data/J.json', '--order', 'alpha'],
         cli.EXIT_CONFIG),
        (['conditional', '--matrix', 'tests/data/J.json', '--interest',
          'alpha', '--known', 'alpha'], cli.EXIT_CONFIG),
        (['sine', '--config', 'tests/data/lmm.json'], cli.EXIT_CONFIG),
        (['validate', '--matrix', 'tests/data/J.json'], cli.EXIT_CONFIG),
        (['joint', '--matrix', 'tests/data/J.json', '--trials', '0'],
         cli.EXIT_CONFIG),
        (['unknown'], cli.EXIT_CONFIG),
        ([], cli.EXIT_CONFIG),
        (['bayes', '--help'], cli.EXIT_OK),
    ]
)
def test_exit_codes(capsys, argv, expected):
    assert cli.main(argv) == expected


def test_numerical_failure_names_quantity(capsys):
    assert cli.main(['joint', '--matrix', 'tests/data/not_pd.json']) == \
        cli.EXIT_NUMERICAL
    assert 'J[p,q] is not positive definite' in capsys.readouterr().err


def test_json_round_trip(capsys, tmp_path):
    saved = tmp_path / 'report.json'
    original = _json(capsys, [
        'marginal', '--matrix', 'tests/data/J.json', '--interest',
        'alpha,beta', '--save', str(saved)])
    shown = _json(capsys, ['show', '--report', str(saved)])
    assert [row['log_value'] for row in shown['rows']] == \
        [row['log_value'] for row in original['rows']]
    assert shown['rows'] == original['rows']


def test_text_matches_json(capsys):
    argv = ['sine', '--model', 'tests/data/sine.json', '--factors']
    report = _json(capsys, argv)
    assert cli.main(argv) == cli.EXIT_OK
    columns = {}
    for line in capsys.readouterr().out.splitlines():
        parts = line.rsplit(None, 2)
        if len(parts) == 3:
            columns[parts[0]] = parts[1:]
    for row in report['rows']:
        value, log_value = columns[row['quantity']]
        assert value == f"{row['value']:.12g}"
        assert log_value == f"{row['log_value']:.12g}"


def test_csv_output(capsys):
    assert cli.main([
        'joint', '--matrix', 'tests/data/J.json', '--output', 'csv']) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == 'quantity,value,log_value'
    quantity, value, log_value = lines[1].rsplit(',', 2)
    assert math.exp(float(log_value)) == pytest.approx(float(value))


def test_run_requests(capsys):
    # analysis.json asks for json output itself
    assert cli.main(['run', '--config', 'tests/data/analysis.json']) == 0
    report = json.loads(capsys.readouterr().out)
    assert report['command'] == 'run'
    assert report['details']['2.bayes.factor'] >= 1.0
    assert report['details']['3.independence.independent'] is False
    assert abs(report['details']['1.chain.log_sum_minus_joint']) < 1e-10


def test_validate_lmm(capsys):
    report = _json(capsys, [
        'validate', '--config', 'tests/data/lmm.json', '--seed', '3'])
    assert set(report['details']['verdicts'].values()) == {'Attains'}
    assert report['details']['seed'] == 3
    assert report['details']['trials'] == 100000
    rows = _rows(report)
    assert rows['inflation(x) predicted']['value'] == \
        pytest.approx(2.0, abs=1e-10)
    assert rows['inflation(x) empirical']['value'] == \
        pytest.approx(2.0, rel=0.05)


def test_validate_violates(capsys, monkeypatch):
    def violating(spec, truth=None, **kwargs):
        mse = EmpiricalMse(np.array([[0.5]]), ('x_0',), 1000, 0, 'fake')
        bound = CrbValue(0.0, ('x',), (), 1)
        report = ExperimentReport(
            'lmm joint', mse, bound, Verdict.VIOLATES, 0.05)
        return InflationStudy([report], {'x': (0.5, 2.0)})

    monkeypatch.setattr(cli, 'validate_lmm', violating)
    assert cli.main(['validate', '--config', 'tests/data/lmm.json']) == \
        cli.EXIT_VIOLATES
    assert 'Violates' in capsys.readouterr().out


def test_fim_estimate(capsys):
    report = _json(capsys, [
        'fim', '--config', 'tests/data/gaussian_mean.yaml'])
    rows = _rows(report)
    assert rows['J[mu,mu]']['value'] == pytest.approx(5.0, rel=1e-2)
    assert 'SE[mu,mu]' in rows
    assert report['details']['estimator'] == 'fd_hessian_fim'
    assert report['details']['seed'] == 7


def test_sine_factors(capsys):
    report = _json(capsys, [
        'sine', '--config', 'tests/data/sine.json', '--factors'])
    rows = _rows(report)
    assert rows['factor(A)']['value'] == pytest.approx(4.0)
    assert rows['factor(B)']['value'] == pytest.approx(1.0)
    assert rows['factor(omega;A)']['value'] == pytest.approx(4.0)
    assert rows['CRB(omega) closed form']['value'] == \
        pytest.approx(rows['CRB(omega)']['value'], rel=1e-8)


def test_independence_bayesian(capsys):
    report = _json(capsys, [
        'independence', '--matrix', 'tests/data/block_diagonal.json',
        '--interest', 'pq', '--other', 'r'])
    assert report['details']['independent'] is True

    report = _json(capsys, [
        'marginal', '--matrix', 'tests/data/block_diagonal.json',
        '--interest', 'r'])
    assert _rows(report)['PCRB(r)']['value'] == pytest.approx(0.2)
