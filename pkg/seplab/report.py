"""
Experiment reports: rows keyed by dimension with a metadata preamble,
emitted as CSV or JSON.
"""

import collections
import csv
import io
import json
import math
import os

from seplab import logger, ConfigInvalid, IoFailure

__all__ = ['Report', 'emit', 'load_json', 'format_value']


class Report(object):
    """Ordered rows (mappings of column name to value) plus metadata.

    Every numeric value must be finite; boolean columns named 'pass' (or
    ending in '_pass') are the row's pass flags.
    """

    __slots__ = ('metadata', 'rows')

    def __init__(self, metadata, rows=()):
        self.metadata = collections.OrderedDict(metadata)
        self.rows = []
        for row in rows:
            self.add(row)

    def add(self, row):
        row = collections.OrderedDict(row)
        for key, value in row.items():
            if isinstance(value, float) and not math.isfinite(value):
                raise ConfigInvalid('column %s of row %s is not finite: %r' %
                                    (key, row.get('d'), value))
        self.rows.append(row)

    @property
    def columns(self):
        columns = []
        for row in self.rows:
            for key in row:
                if key not in columns:
                    columns.append(key)
        return columns

    def failing(self):
        return [row for row in self.rows
                if any(v is False for k, v in row.items() if k == 'pass' or k.endswith('_pass'))]

    def passed(self):
        return not self.failing()

    def sort(self):
        self.rows.sort(key=lambda row: row.get('d', 0))

    def __eq__(self, other):
        return isinstance(other, Report) and self.metadata == other.metadata and \
            self.rows == other.rows

    def __len__(self):
        return len(self.rows)


def format_value(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_text(report):
    out = io.StringIO()
    for key, value in report.metadata.items():
        out.write('# %s: %s\n' % (key, format_value(value)))
    writer = csv.writer(out, lineterminator='\n')
    columns = report.columns
    writer.writerow(columns)
    for row in report.rows:
        writer.writerow([format_value(row.get(key, '')) for key in columns])
    return out.getvalue()


def _json_text(report):
    return json.dumps({'metadata': report.metadata, 'rows': report.rows}, indent=1) + '\n'


def emit(report, fmt, path):
    """Write 'report' to 'path' as 'csv' or 'json'.
    """
    if not report.rows:
        raise ConfigInvalid('refusing to emit an empty report')
    if fmt == 'csv':
        text = _csv_text(report)
    elif fmt == 'json':
        text = _json_text(report)
    else:
        raise ConfigInvalid('unknown report format %r' % (fmt,))
    try:
        with open(path, 'w', newline='') as fd:
            fd.write(text)
    except (IOError, OSError) as exc:
        raise IoFailure('could not write %s: %s' % (path, exc))
    logger.info('wrote %d rows to %s', len(report.rows), os.path.abspath(path))
    return path


def load_json(path):
    try:
        with open(path) as fd:
            doc = json.load(fd, object_pairs_hook=collections.OrderedDict)
    except (IOError, OSError, ValueError) as exc:
        raise IoFailure('could not read %s: %s' % (path, exc))
    return Report(doc['metadata'], doc['rows'])
