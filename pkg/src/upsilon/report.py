"""This module provides run reports: JSON documents with the configuration echo, results and
timing, CSV tables, and the sweep ratio table comparing Upsilon estimates with the
n / log Delta and n log log Delta / log Delta scales."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, TextIO
import csv
import io
import json
import logging
import math

from .constants import SCHEMA_VERSION
from .options import RunConfig

TIMING_KEY = 'timing'


@dataclass
class Report:
    """
    The outcome of one run.

    Attributes:
        config: The configuration of the run.
        results: Command-specific results.
        rows: Table rows for CSV output (one row per sweep point, block or trial group).
        timing: Wall-clock seconds per section, plus the total.
    """

    config: RunConfig
    results: Dict = field(default_factory=dict)
    rows: List[Dict] = field(default_factory=list)
    timing: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        data = {
            'schema_version': SCHEMA_VERSION,
            'command': self.config.command,
            'config': self.config.as_dict(),
            'results': self.results,
        }
        if self.rows:
            data['rows'] = self.rows
        data[TIMING_KEY] = self.timing
        return data


def error_object(error: Exception, config: Optional[RunConfig]) -> Dict:
    """Machine-readable description of a failed run."""
    return {
        'schema_version': SCHEMA_VERSION,
        'error': {'type': type(error).__name__, 'message': str(error)},
        'config': config.as_dict() if config is not None else None,
    }


def strip_timing(data: Dict) -> Dict:
    """Copy of report `data` without timing fields, for comparing runs."""
    return {key: value for key, value in data.items() if key != TIMING_KEY}


def to_json_text(data: Dict) -> str:
    return json.dumps(data, indent=2) + '\n'


def _flatten(prefix: str, value, out: Dict):
    if isinstance(value, dict):
        for key, item in value.items():
            _flatten(f'{prefix}.{key}' if prefix else str(key), item, out)
    elif isinstance(value, list):
        out[prefix] = json.dumps(value)
    else:
        out[prefix] = value


def to_csv_text(report: Report) -> str:
    """CSV rendering: the table rows if the report has any, otherwise one
    "field,value" row per flattened result and configuration entry."""
    buffer = io.StringIO(newline='')
    if report.rows:
        columns = list(report.rows[0])
        for row in report.rows[1:]:
            columns += [key for key in row if key not in columns]
        writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator='\n')
        writer.writeheader()
        for row in report.rows:
            flat = {}
            for key, value in row.items():
                _flatten(key, value, flat)
            writer.writerow(flat)
        return buffer.getvalue()
    flat = {}
    _flatten('config', report.config.as_dict(), flat)
    _flatten('results', report.results, flat)
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(['field', 'value'])
    for key, value in flat.items():
        writer.writerow([key, value])
    return buffer.getvalue()


def render(report: Report) -> str:
    """The report in its configured format."""
    if report.config.report_format == 'csv':
        return to_csv_text(report)
    return to_json_text(report.to_dict())


def write_report(report: Report, path: Optional[Path] = None, stream: Optional[TextIO] = None):
    """Write the rendered report to `path`, or to `stream` if no path is given."""
    logger = logging.getLogger(__name__)
    text = render(report)
    if path is None:
        stream.write(text)
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, mode='w', encoding='utf-8', newline='\n') as filepointer:
        filepointer.write(text)
    logger.info('Report written to %s', path)


def ratio_row(n: int, delta: int, best: int) -> Dict:
    """
    One row of the sweep table for a graph with `n` vertices, maximum degree `delta`
    and a best found subset with `best` unique neighbors.

    The normalized ratio best log Delta / (n log log Delta) stays bounded
    when Upsilon is of order n log log Delta / log Delta. Scales that
    are undefined for small Delta are None.
    """
    log_delta = math.log2(delta) if delta > 1 else None
    log_log = math.log2(log_delta) if log_delta is not None and log_delta > 1 else None
    row = {
        'n': n,
        'delta': delta,
        'best': best,
        'n_over_log_delta': n / log_delta if log_delta else None,
        'n_loglog_over_log_delta': n * log_log / log_delta if log_log else None,
        'ratio': best * log_delta / (n * log_log) if log_log else None,
    }
    return row
