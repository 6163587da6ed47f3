"""
Command line entry point, `crb <command> --config analysis.json`.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 when a Monte Carlo experiment violates its bound.
"""
import sys
import math
import logging
import argparse
from typing import Callable, Dict, List, Optional

from omegaconf import DictConfig

from .config.analysis_config import RequestConfig
from .config.problem import Problem, build_problem
from .errors import ConfigurationError, NumericalError
from .fim.core import bayes_factor, chain_decompose, crb_conditional, \
    crb_joint, crb_marginal, independence_check
from .models.linear_mixed import lmm_crb_closed_form, lmm_inflation
from .models.sine_wave import sine_crb_omega, sine_inflation_factors
from .utils.data import load_config, read_report_json, write_output
from .validate.experiments import LMM_SLACK, SINE_SLACK, InflationStudy, \
    Verdict, validate_lmm, validate_sine
from .view.report import FORMATS, Report, ReportRow, crb_row, factor_row, \
    render, report_from_json, scalar_row

__all__ = ["main", "build_parser", "run_request", "EXIT_OK", "EXIT_CONFIG",
           "EXIT_NUMERICAL", "EXIT_VIOLATES"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VIOLATES = 4

REQUEST_KINDS = (
    'joint', 'marginal', 'conditional', 'chain', 'bayes', 'independence',
    'mc-experiment'
)


def _names(value) -> List[str]:
    """
    Block names from "a,b", a single name or a list.
    """
    if value is None:
        return []
    if isinstance(value, str):
        return [name.strip() for name in value.split(',') if name.strip()]
    return [str(name) for name in value]


def _single(value, option: str) -> str:
    names = _names(value)
    if len(names) != 1:
        raise ConfigurationError(f'{option} needs exactly one block name')
    return names[0]


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(
            f'expected a positive integer: {text}')
    return value


# ---------------------------------------------------------------------------
# Requests
# ---------------------------------------------------------------------------
def _joint(problem: Problem, conf: DictConfig, request) -> Report:
    blocks = _names(request.blocks) or list(problem.partition.names)
    crb = crb_joint(problem.fisher, problem.partition, blocks)
    return Report('joint', problem.model, [crb_row(crb)])


def _marginal(problem: Problem, conf: DictConfig, request) -> Report:
    interest = _names(request.interest)
    rows = [crb_row(crb_marginal(problem.fisher, problem.partition, name))
            for name in interest]
    if len(interest) > 1:
        rows.append(crb_row(
            crb_marginal(problem.fisher, problem.partition, interest)))
    return Report('marginal', problem.model, rows)


def _conditional(problem: Problem, conf: DictConfig, request) -> Report:
    crb = crb_conditional(
        problem.fisher, problem.partition, _names(request.interest),
        _names(request.known))
    return Report('conditional', problem.model, [crb_row(crb)])


def _chain(problem: Problem, conf: DictConfig, request) -> Report:
    order = _names(request.order) or list(problem.partition.names)
    factors = chain_decompose(problem.fisher, problem.partition, order)
    joint = crb_joint(problem.fisher, problem.partition, order)
    log_sum = math.fsum(crb.log_value for _, crb in factors)
    rows = [crb_row(crb) for _, crb in factors] + [crb_row(joint)]
    details = {
        'order': order,
        'log_sum': log_sum,
        'log_sum_minus_joint': log_sum - joint.log_value,
    }
    return Report('chain', problem.model, rows, details)


def _bayes(problem: Problem, conf: DictConfig, request) -> Report:
    interest = _single(request.interest, '--interest')
    other = _single(request.other, '--other')
    fisher, partition = problem.fisher, problem.partition
    decomposition = bayes_factor(fisher, partition, interest, other)
    rows = [
        crb_row(decomposition.lhs),
        crb_row(crb_conditional(fisher, partition, interest, [other])),
        crb_row(crb_marginal(fisher, partition, other)),
        crb_row(crb_conditional(fisher, partition, other, [interest])),
        factor_row(f'factor({interest};{other})', decomposition.factor),
    ]
    details = {
        'factor': decomposition.factor,
        'log_rhs_minus_lhs':
            decomposition.rhs_product.log_value - decomposition.lhs.log_value,
    }
    return Report('bayes', problem.model, rows, details)


def _independence(problem: Problem, conf: DictConfig, request) -> Report:
    a = _names(request.interest)
    b = _names(request.other)
    if not a or not b:
        raise ConfigurationError('independence needs --interest and --other')
    independent = independence_check(
        problem.fisher, problem.partition, a, b, request.tol)
    quantity = f'independent({",".join(a)};{",".join(b)})'
    return Report(
        'independence', problem.model,
        [scalar_row(quantity, float(independent), kind='flag')],
        {'independent': independent, 'tol': request.tol})


def _study_report(
            command: str,
            model: str,
            study: InflationStudy
        ) -> Report:
    rows, verdicts, discarded = [], {}, {}
    for report in study.reports:
        rows.append(ReportRow(
            f'GV[{report.name}]', report.mse.log_gen_variance, kind='mse'))
        rows.append(crb_row(report.bound))
        verdicts[report.name] = report.verdict.value
        discarded[report.name] = report.mse.discarded
    for name, (empirical, predicted) in study.inflation.items():
        rows.append(factor_row(f'inflation({name}) empirical', empirical))
        rows.append(factor_row(f'inflation({name}) predicted', predicted))
    details = {
        'verdicts': verdicts,
        'discarded': discarded,
        'slack': study.reports[0].slack,
        'trials': study.reports[0].mse.trials,
        'seed': study.reports[0].mse.seed,
    }
    return Report(command, model, rows, details)


def _experiment(
            problem: Problem,
            conf: DictConfig,
            request,
            progress: bool = False
        ) -> Report:
    if problem.lmm is not None:
        truth = None
        if conf.lmm.x is not None and conf.lmm.z is not None:
            truth = (list(conf.lmm.x), list(conf.lmm.z))
        study = validate_lmm(
            problem.lmm, truth,
            trials=conf.trials or 100000,
            seed=conf.seed,
            slack=LMM_SLACK if conf.slack is None else conf.slack,
            workers=conf.workers,
            progress=progress)
    elif problem.sine is not None:
        study = validate_sine(
            problem.sine,
            trials=conf.trials or 2000,
            seed=conf.seed,
            slack=SINE_SLACK if conf.slack is None else conf.slack,
            workers=conf.workers,
            progress=progress)
    else:
        raise ConfigurationError(
            f'Monte Carlo experiments need an lmm or sine model, '
            f'got {problem.model}')
    return _study_report('validate', problem.model, study)


REQUESTS: Dict[str, Callable] = {
    'joint': _joint,
    'marginal': _marginal,
    'conditional': _conditional,
    'chain': _chain,
    'bayes': _bayes,
    'independence': _independence,
    'mc-experiment': _experiment,
}


def run_request(
            problem: Problem,
            conf: DictConfig,
            request: RequestConfig
        ) -> Report:
    """
    Execute one analysis request against a built problem.
    """
    if request.kind not in REQUESTS:
        raise ConfigurationError(
            f'Unknown request kind {request.kind}, expected one of '
            f'{REQUEST_KINDS}')
    return REQUESTS[request.kind](problem, conf, request)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------
def _request(kind: str, args: argparse.Namespace) -> RequestConfig:
    return RequestConfig(
        kind=kind,
        interest=getattr(args, 'interest', None),
        other=getattr(args, 'other', None),
        known=_names(getattr(args, 'known', None)),
        blocks=_names(getattr(args, 'blocks', None)),
        order=_names(getattr(args, 'order', None)),
        tol=getattr(args, 'tol', 1e-10),
    )


def _lmm_command(problem, conf, args) -> Report:
    if problem.lmm is None:
        raise ConfigurationError('crb lmm needs model "lmm"')
    rows = [crb_row(crb) for crb in lmm_crb_closed_form(problem.lmm).values()]
    if args.inflation:
        rows.append(factor_row('inflation(x)', lmm_inflation(problem.lmm)))
    return Report('lmm', problem.model, rows)


def _sine_command(problem, conf, args) -> Report:
    spec = problem.sine
    if spec is None:
        raise ConfigurationError('crb sine needs model "sine"')
    omega = sine_crb_omega(spec)
    rows = [
        ReportRow('CRB(omega) closed form', math.log(omega['omega'])),
        ReportRow('CRB(omega|A) closed form', math.log(omega['omega|A'])),
    ]
    rows += [
        crb_row(crb_marginal(problem.fisher, problem.partition, name))
        for name in problem.partition.names
    ]
    if args.factors:
        rows += [
            factor_row(f'factor({name})', factor)
            for name, factor in sine_inflation_factors(spec).items()
        ]
        rows.append(factor_row(
            'factor(omega;A)', omega['omega'] / omega['omega|A']))
    details = {'fim': conf.sine.fim,
               'parameterization': conf.sine.parameterization}
    return Report('sine', problem.model, rows, details)


def _fim_command(problem, conf, args) -> Report:
    fisher = problem.fisher
    rows = []
    for i, row_label in enumerate(fisher.labels):
        for j in range(i, fisher.dim):
            rows.append(scalar_row(
                f'J[{row_label},{fisher.labels[j]}]', fisher.entries[i, j]))
    details = {'labels': list(fisher.labels), 'bayesian': fisher.bayesian,
               'condition_number': fisher.condition_number()}
    estimate = problem.estimate
    if estimate is not None:
        for i, row_label in enumerate(fisher.labels):
            for j in range(i, fisher.dim):
                rows.append(scalar_row(
                    f'SE[{row_label},{fisher.labels[j]}]',
                    estimate.standard_error[i, j], kind='se'))
        details.update({'estimator': estimate.estimator,
                        'trials': estimate.trials, 'seed': estimate.seed})
    return Report('fim', problem.model, rows, details)


def _validate_command(problem, conf, args) -> Report:
    return _experiment(problem, conf, None, progress=args.progress)


def _run_command(problem, conf, args) -> Report:
    if not conf.requests:
        raise ConfigurationError('crb run needs a non-empty requests list')
    combined = Report('run', problem.model)
    for position, request in enumerate(conf.requests):
        logging.info(f'Request {position}: {request.kind}')
        report = run_request(problem, conf, request)
        combined.rows.extend(report.rows)
        for key, value in report.details.items():
            combined.details[f'{position}.{request.kind}.{key}'] = value
    return combined


COMMANDS: Dict[str, Callable] = {
    'joint': lambda p, c, a: _joint(p, c, _request('joint', a)),
    'marginal': lambda p, c, a: _marginal(p, c, _request('marginal', a)),
    'conditional': lambda p, c, a: _conditional(
        p, c, _request('conditional', a)),
    'chain': lambda p, c, a: _chain(p, c, _request('chain', a)),
    'bayes': lambda p, c, a: _bayes(p, c, _request('bayes', a)),
    'independence': lambda p, c, a: _independence(
        p, c, _request('independence', a)),
    'lmm': _lmm_command,
    'sine': _sine_command,
    'fim': _fim_command,
    'validate': _validate_command,
    'run': _run_command,
}


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        '--config', '--model', '--matrix', dest='config', required=True,
        help='JSON (or YAML) analysis configuration or matrix file')
    common.add_argument(
        '--seed', type=int, default=None,
        help='integer seed for Monte Carlo runs (default 0)')
    common.add_argument(
        '--trials', type=_positive_int, default=None,
        help='Monte Carlo trials')
    common.add_argument(
        '--workers', type=_positive_int, default=None,
        help='threads used for Monte Carlo chunks')
    common.add_argument(
        '--slack', type=float, default=None,
        help='multiplicative slack of the attainment verdict')
    common.add_argument(
        '--output', choices=FORMATS, default=None,
        help='report format (default text)')
    common.add_argument(
        '--save', default=None, help='also write the report to this file')
    common.add_argument(
        '--progress', action='store_true', help='show a progress bar')
    common.add_argument(
        '-v', '--verbose', action='count', default=0,
        help='-v for info, -vv for debug logging')

    parser = argparse.ArgumentParser(
        prog='crb',
        description='Cramer-Rao bounds over partitioned Fisher matrices.')
    commands = parser.add_subparsers(dest='command', required=True)

    joint = commands.add_parser(
        'joint', parents=[common], help='joint CRB of blocks')
    joint.add_argument('--blocks', help='comma separated, default all')

    marginal = commands.add_parser(
        'marginal', parents=[common], help='marginal CRB, others unknown')
    marginal.add_argument('--interest', required=True)

    conditional = commands.add_parser(
        'conditional', parents=[common], help='CRB with known blocks')
    conditional.add_argument('--interest', required=True)
    conditional.add_argument('--known', default='')

    chain = commands.add_parser(
        'chain', parents=[common], help='chain-rule decomposition')
    chain.add_argument('--order', help='block order, default partition order')

    bayes = commands.add_parser(
        'bayes', parents=[common], help='Bayes-rule inflation factor')
    bayes.add_argument('--interest', required=True)
    bayes.add_argument('--other', required=True)

    independence = commands.add_parser(
        'independence', parents=[common], help='zero cross information test')
    independence.add_argument('--interest', required=True)
    independence.add_argument('--other', required=True)
    independence.add_argument('--tol', type=float, default=1e-10)

    lmm = commands.add_parser(
        'lmm', parents=[common], help='linear mixed model bounds')
    lmm.add_argument(
        '--inflation', action='store_true',
        help='report |B^T B| / |B^T P_A B|')

    sine = commands.add_parser(
        'sine', parents=[common], help='sine-wave fitting bounds')
    sine.add_argument(
        '--factors', action='store_true',
        help='report the inflation factors of A, B and C')

    commands.add_parser(
        'fim', parents=[common], help='print the Fisher matrix')
    commands.add_parser(
        'validate', parents=[common], help='Monte Carlo attainment check')
    commands.add_parser(
        'run', parents=[common], help='execute the configured requests')

    show = commands.add_parser(
        'show', help='render a saved JSON report')
    show.add_argument('--report', required=True)
    show.add_argument('--output', choices=FORMATS, default='text')
    show.add_argument('-v', '--verbose', action='count', default=0)
    return parser


def _setup_logging(verbose: int) -> None:
    level = logging.WARNING
    if verbose == 1:
        level = logging.INFO
    elif verbose > 1:
        level = logging.DEBUG
    logging.basicConfig(
        stream=sys.stderr, level=level,
        format='%(asctime)s %(levelname)s %(message)s')


def _overrides(args: argparse.Namespace) -> dict:
    overrides = {}
    for key in ('seed', 'trials', 'workers', 'slack', 'output'):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return overrides


def _violated(report: Report) -> bool:
    return any(
        verdict == Verdict.VIOLATES.value
        for key, verdicts in report.details.items()
        if key.endswith('verdicts')
        for verdict in verdicts.values())


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run the `crb` command line and return its exit code.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_OK if err.code in (0, None) else EXIT_CONFIG
    _setup_logging(args.verbose)

    try:
        if args.command == 'show':
            report = report_from_json(read_report_json(args.report))
            output = args.output
        else:
            conf = load_config(args.config, _overrides(args))
            problem = build_problem(conf)
            report = COMMANDS[args.command](problem, conf, args)
            output = conf.output
        text = render(report, output)
    except ConfigurationError as err:
        print(f'crb: configuration error: {err}', file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as err:
        print(f'crb: numerical failure: {err}', file=sys.stderr)
        return EXIT_NUMERICAL

    write_output(text)
    if getattr(args, 'save', None):
        write_output(text, args.save)
    if args.command != 'show' and _violated(report):
        return EXIT_VIOLATES
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
