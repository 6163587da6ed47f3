"""
Report rendering. Every CRB is reported as a log-value and a linear value;
linear values beyond exp(700) print as "overflow".
"""
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import pandas as pd

from ..errors import ConfigurationError
from ..fim.core import CrbValue

__all__ = [
    "ReportRow", "Report", "OVERFLOW_LOG", "FORMATS", "crb_row",
    "factor_row", "scalar_row", "linear_value", "render", "render_text",
    "render_json", "render_csv", "report_from_json"
]

OVERFLOW_LOG = 700.0
FORMATS = ('text', 'json', 'csv')
SIGNIFICANT = 12


@dataclass
class ReportRow:
    quantity: str

    # natural log of the value, None for plain scalars and flags
    log_value: Optional[float]

    # linear value for rows without a log-value
    scalar: Optional[float] = None

    # crb, factor, entry, flag, verdict
    kind: str = 'crb'

    @property
    def value(self) -> Any:
        if self.log_value is None:
            return self.scalar
        return linear_value(self.log_value)


@dataclass
class Report:
    command: str
    model: str
    rows: List[ReportRow] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)

    def log_values(self) -> Dict[str, float]:
        return {
            row.quantity: row.log_value for row in self.rows
            if row.log_value is not None
        }


def linear_value(log_value: float) -> Any:
    """
    exp(log_value), or the string "overflow" beyond exp(700).
    """
    if log_value > OVERFLOW_LOG:
        return 'overflow'
    return math.exp(log_value)


def crb_row(crb: CrbValue) -> ReportRow:
    return ReportRow(crb.name, crb.log_value, kind='crb')


def factor_row(quantity: str, factor: float) -> ReportRow:
    return ReportRow(quantity, math.log(factor), kind='factor')


def scalar_row(quantity: str, value: float, kind: str = 'entry') -> ReportRow:
    return ReportRow(quantity, None, float(value), kind)


def _fmt(value: Any, missing: str = '-') -> str:
    if value is None:
        return missing
    if isinstance(value, str):
        return value
    return f'{value:.{SIGNIFICANT}g}'


def render_text(report: Report) -> str:
    lines = [f'crb {report.command} (model {report.model})']
    width = max([len(row.quantity) for row in report.rows] + [8]) + 2
    lines.append(f'{"quantity":<{width}}{"value":<22}log_value')
    for row in report.rows:
        lines.append(
            f'{row.quantity:<{width}}{_fmt(row.value):<22}'
            f'{_fmt(row.log_value)}')
    for key, value in report.details.items():
        lines.append(f'{key}: {value}')
    return '\n'.join(lines)


def render_json(report: Report) -> str:
    rows = []
    for row in report.rows:
        entry = asdict(row)
        entry['value'] = row.value
        rows.append(entry)
    return json.dumps({
        'command': report.command,
        'model': report.model,
        'rows': rows,
        'details': report.details,
    }, indent=2)


def render_csv(report: Report) -> str:
    frame = pd.DataFrame(
        [(row.quantity, _fmt(row.value, ''), _fmt(row.log_value, ''))
         for row in report.rows],
        columns=['quantity', 'value', 'log_value'])
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False)
    return buffer.getvalue().rstrip('\n')


def render(report: Report, output: str = 'text') -> str:
    """
    Render a report in one of FORMATS.
    """
    if output == 'text':
        return render_text(report)
    if output == 'json':
        return render_json(report)
    if output == 'csv':
        return render_csv(report)
    raise ConfigurationError(f'output must be one of {FORMATS}: {output}')


def report_from_json(data: Dict[str, Any]) -> Report:
    """
    Rebuild a report from its JSON form; log-values are read back
    unchanged.
    """
    try:
        rows = [
            ReportRow(row['quantity'], row.get('log_value'),
                      row.get('scalar'), row.get('kind', 'crb'))
            for row in data['rows']
        ]
        return Report(
            data['command'], data['model'], rows, data.get('details', {}))
    except (KeyError, TypeError) as err:
        raise ConfigurationError(f'Malformed report: {err}')
