"""CSV reading and writing of compositional tables and derived outputs."""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, NegativeValue, ParseError
from .simplex import CompositionalTable


@dataclass(frozen=True)
class CsvSchema:
    delimiter: str = ","
    na_tokens: frozenset = frozenset({"NA", "", "NaN"})
    header: bool = True
    precision: int = 10

    def __post_init__(self):
        if len(self.delimiter) != 1:
            raise ValueError(f"delimiter must be a single character, got {self.delimiter!r}")
        object.__setattr__(self, "na_tokens", frozenset(self.na_tokens))
        if not self.na_tokens:
            raise ValueError("at least one NA token is required")

    @property
    def na_output(self):
        return "NA" if "NA" in self.na_tokens else sorted(self.na_tokens)[0]

    def fmt(self, v):
        return format(float(v), f".{self.precision}g")


def read_table(path, schema=None):
    """Read a numeric CSV whose NA tokens mark missing cells.

    CRLF and LF line endings are both accepted; blank lines are skipped.
    Complete rows are re-closed (see :meth:`CompositionalTable.from_array`).

    Raises
    ------
    EmptyInput
        If the file holds no data rows.
    ParseError
        On ragged rows or non-numeric, non-NA tokens.
    NegativeValue
        On negative entries.
    """
    schema = schema or CsvSchema()
    with open(path, newline="", encoding="utf-8") as fh:
        text = fh.read()
    return parse_table(text, schema)


def parse_table(text, schema=None):
    schema = schema or CsvSchema()
    rows = [(n, r) for n, r in enumerate(csv.reader(io.StringIO(text), delimiter=schema.delimiter), start=1)
            if r and any(c.strip() for c in r)]
    if not rows:
        raise EmptyInput("no rows in input")
    names = None
    if schema.header:
        names = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
        if not rows:
            raise EmptyInput("header but no data rows")
    width = len(names) if names else len(rows[0][1])
    values = np.empty((len(rows), width))
    for i, (line, cells) in enumerate(rows):
        if len(cells) != width:
            raise ParseError(f"expected {width} fields, found {len(cells)}", line)
        for j, cell in enumerate(cells):
            token = cell.strip()
            if token in schema.na_tokens:
                values[i, j] = np.nan
                continue
            try:
                v = float(token)
            except ValueError:
                raise ParseError(f"column {j + 1}: cannot parse {token!r} as a number", line) from None
            if not np.isfinite(v):
                raise ParseError(f"column {j + 1}: non-finite value {token!r}", line)
            if v < 0:
                raise NegativeValue(f"line {line}, column {j + 1}: negative value {v!r}")
            values[i, j] = v
    return CompositionalTable.from_array(values, column_names=names)


def _write_rows(path, header, rows, delimiter=","):
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
            if header is not None:
                w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {os.fspath(path)!r}: {exc.strerror or exc}") from exc


def write_table(table, path, schema=None):
    """Write a table (or an imputation result's completed table) as CSV.

    Masked cells are written as the NA token; values use ``schema.precision``
    significant digits.
    """
    schema = schema or CsvSchema()
    table = getattr(table, "completed_table", table)
    rows = [
        [schema.fmt(v) if m else schema.na_output for v, m in zip(vals, mask)]
        for vals, mask in zip(table.values, table.mask)
    ]
    _write_rows(path, list(table.column_names) if schema.header else None, rows, schema.delimiter)


def write_truth(truth, path, schema=None):
    """Hidden cells of an injection as ``row,col,value`` (0-based indices)."""
    schema = schema or CsvSchema()
    rows = [[int(r), int(c), format(float(v), ".17g")] for r, c, v in zip(truth.rows, truth.cols, truth.values)]
    _write_rows(path, ["row", "col", "value"], rows, schema.delimiter)


def write_contour_grid(grid, path, schema=None):
    schema = schema or CsvSchema()
    rows = [[schema.fmt(a), schema.fmt(b), schema.fmt(c), schema.fmt(d)]
            for (a, b, c), d in zip(grid.points, grid.distances)]
    _write_rows(path, ["a", "b", "c", "distance"], rows, schema.delimiter)


def write_trajectory(alphas, means, path, column_names=None, schema=None):
    schema = schema or CsvSchema()
    means = np.asarray(means)
    names = list(column_names) if column_names else [f"part_{j + 1}" for j in range(means.shape[1])]
    rows = [[schema.fmt(a)] + [schema.fmt(v) for v in m] for a, m in zip(alphas, means)]
    _write_rows(path, ["alpha"] + names, rows, schema.delimiter)


def write_scores(report, path, schema=None):
    """Tuning scores as a flat ``alpha,k,mean_score`` table."""
    schema = schema or CsvSchema()
    rows = [[schema.fmt(a), int(k), format(report.scores[(a, k)], ".17g")]
            for a in report.alpha_grid for k in report.k_grid]
    _write_rows(path, ["alpha", "k", "mean_score"], rows, schema.delimiter)


def write_json(obj, path):
    """Deterministic JSON (sorted keys, fixed indentation, trailing newline)."""
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {os.fspath(path)!r}: {exc.strerror or exc}") from exc
