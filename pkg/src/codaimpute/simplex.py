"""Compositions, tables with a missingness mask, and row decomposition.

A composition is a 1-D float array of non-negative parts summing to one.
Tables keep missing cells as ``nan`` in ``values`` and ``False`` in ``mask``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateInput,
    DegenerateRow,
    DimensionMismatch,
    InconsistentRow,
    MissingSetEmpty,
    NegativeValue,
    NoDonors,
)

logger = logging.getLogger(__name__)

#: complete rows further than this from unit sum are reported when re-closed
SUM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Note:
    """A structured warning/decision record.

    ``kind`` is a short machine tag (``"reclosed"``, ``"donor_excluded"``,
    ``"zero_budget"``, ``"fallback"``, ...), ``row`` the table row concerned
    (or ``None``).
    """

    kind: str
    message: str
    row: int | None = None

    def as_dict(self):
        return {"kind": self.kind, "row": self.row, "message": self.message}


def _note(kind, message, row=None):
    logger.warning("%s (row=%s): %s", kind, row, message, extra={"kind": kind, "row": row})
    return Note(kind, message, row)


def closure(raw):
    """Normalise non-negative parts so they sum to one.

    Works on a single vector or row-wise on a 2-D array.

    Raises
    ------
    NegativeValue
        If any entry is negative.
    DegenerateInput
        If a vector (or any row) sums to zero.
    """
    x = np.asarray(raw, dtype=float)
    if np.any(x < 0):
        raise NegativeValue("closure of a vector with negative entries")
    total = x.sum(axis=-1, keepdims=True)
    if np.any(total <= 0) or not np.all(np.isfinite(total)):
        raise DegenerateInput("closure of an all-zero (or non-finite) vector")
    # rows already closed up to summation round-off are returned untouched,
    # which makes closure exactly idempotent
    closed = np.abs(total - 1.0) <= 4 * x.shape[-1] * np.finfo(float).eps
    return np.where(closed, x, x / total)


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MissingnessPattern:
    """Sorted indices of the missing columns of an incomplete row."""

    missing_columns: tuple

    def __post_init__(self):
        cols = tuple(int(c) for c in self.missing_columns)
        if not cols:
            raise MissingSetEmpty("a missingness pattern needs at least one column")
        if any(b <= a for a, b in zip(cols, cols[1:])) or cols[0] < 0:
            raise ValueError(f"pattern columns must be strictly increasing: {cols}")
        object.__setattr__(self, "missing_columns", cols)

    @classmethod
    def from_mask_row(cls, mask_row):
        return cls(tuple(np.flatnonzero(~np.asarray(mask_row, dtype=bool))))

    def observed_columns(self, n_parts):
        missing = set(self.missing_columns)
        return tuple(j for j in range(n_parts) if j not in missing)

    def __eq__(self, other):
        return isinstance(other, MissingnessPattern) and self.missing_columns == other.missing_columns

    def __hash__(self):
        return hash(self.missing_columns)

    def __lt__(self, other):
        return self.missing_columns < other.missing_columns

    def __str__(self):
        return "{" + ",".join(str(c) for c in self.missing_columns) + "}"


@dataclass(frozen=True, eq=False)
class CompositionalTable:
    """An ``n x D`` table of parts with an observed-cell mask.

    Build instances with :meth:`from_array`, which re-closes complete rows and
    records a :class:`Note` for every row that was off unit sum by more than
    ``SUM_TOLERANCE``.
    """

    values: np.ndarray
    mask: np.ndarray
    column_names: tuple
    notes: tuple = field(default=())

    @classmethod
    def from_array(cls, values, mask=None, column_names=None, reclose=True):
        values = np.array(values, dtype=float, copy=True)
        if values.ndim != 2:
            raise DimensionMismatch(f"expected a 2-D table, got shape {values.shape}")
        if mask is None:
            mask = ~np.isnan(values)
        mask = np.array(mask, dtype=bool, copy=True)
        if mask.shape != values.shape:
            raise DimensionMismatch(f"mask shape {mask.shape} != values shape {values.shape}")
        n, D = values.shape
        if column_names is None:
            column_names = tuple(f"x{j + 1}" for j in range(D))
        column_names = tuple(str(c) for c in column_names)
        if len(column_names) != D:
            raise DimensionMismatch(f"{len(column_names)} column names for {D} columns")

        values[~mask] = np.nan
        if np.any(~np.isfinite(values[mask])):
            raise ValueError("observed cells must be finite")
        bad = np.argwhere(mask & (np.nan_to_num(values) < 0))
        if len(bad):
            i, j = bad[0]
            raise NegativeValue(f"negative value {values[i, j]!r} at row {i}, column {j}")

        notes = []
        if reclose:
            complete = mask.all(axis=1)
            for i in np.flatnonzero(complete):
                total = values[i].sum()
                if total <= 0:
                    raise DegenerateInput(f"row {i}: complete row sums to zero")
                if abs(total - 1.0) > SUM_TOLERANCE:
                    notes.append(_note("reclosed", f"complete row summed to {total:.10g}; re-closed", int(i)))
                values[i] = closure(values[i])
            for i in np.flatnonzero(~complete):
                total = values[i, mask[i]].sum()
                if total > 1.0 + SUM_TOLERANCE:
                    notes.append(_note("over_budget", f"observed parts sum to {total:.10g} > 1", int(i)))
        return cls(_frozen(values), _frozen_mask(mask), column_names, tuple(notes))

    @property
    def shape(self):
        return self.values.shape

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_parts(self):
        return self.values.shape[1]

    @property
    def complete_rows(self):
        """Boolean vector, true where the row has no missing cell."""
        return self.mask.all(axis=1)

    @property
    def has_missing(self):
        return not bool(self.mask.all())

    def patterns(self):
        """Map each incomplete row index to its :class:`MissingnessPattern`."""
        return {
            int(i): MissingnessPattern.from_mask_row(self.mask[i])
            for i in np.flatnonzero(~self.complete_rows)
        }

    def has_zeros(self):
        """True if any observed cell is exactly zero."""
        return bool(np.any(self.values[self.mask] == 0))

    def with_values(self, values, mask=None, notes=()):
        """Copy with new values/mask; no re-closure is applied."""
        mask = self.mask if mask is None else mask
        return CompositionalTable(_frozen(values), _frozen_mask(mask), self.column_names,
                                  self.notes + tuple(notes))


def _frozen_mask(m):
    m = np.array(m, dtype=bool, copy=True)
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class Partition:
    complete_index: np.ndarray
    incomplete_index: np.ndarray
    complete: np.ndarray
    incomplete: np.ndarray
    incomplete_mask: np.ndarray

    def reassemble(self, n_parts):
        """Rebuild the original ``values`` array (round-trip of :func:`partition`)."""
        n = len(self.complete_index) + len(self.incomplete_index)
        out = np.empty((n, n_parts))
        out[self.complete_index] = self.complete
        out[self.incomplete_index] = self.incomplete
        return out


def partition(table):
    """Split a table into its complete rows and its incomplete rows.

    Both halves keep their original row indices, so either may be empty and
    the split can be undone with :meth:`Partition.reassemble`.
    """
    complete = table.complete_rows
    ci = np.flatnonzero(complete)
    mi = np.flatnonzero(~complete)
    return Partition(ci, mi, table.values[ci], table.values[mi], table.mask[mi])


@dataclass(frozen=True)
class RowDecomposition:
    observed_sub: np.ndarray
    missing_total: float
    observed_columns: tuple
    missing_columns: tuple


def missing_total(row, mask_row, row_index=None):
    """Mass left for the missing parts: one minus the observed sum, clamped to [0, 1]."""
    observed = np.asarray(row, dtype=float)[np.asarray(mask_row, dtype=bool)]
    total = 1.0 - observed.sum()
    if total < -SUM_TOLERANCE:
        raise InconsistentRow(row_index, float(observed.sum()))
    return min(max(total, 0.0), 1.0)


def decompose_row(row, mask_row, complete_rows, row_index=None):
    """Split an incomplete row into its normalised observed sub-vector and budget.

    Parameters
    ----------
    row, mask_row : array_like of shape (D,)
        The incomplete row and its observed-cell mask.
    complete_rows : array_like of shape (n_c, D)
        Candidate donor rows.
    row_index : int, optional
        Used only in error messages.

    Returns
    -------
    decomposition : RowDecomposition
    donor_subs : ndarray of shape (n_c, n_observed)
        Each donor's sub-vector on the observed columns, re-closed. Rows of
        excluded donors are left as ``nan``.
    usable : ndarray of bool, shape (n_c,)
        False for donors whose observed-column sub-vector sums to zero.
    """
    row = np.asarray(row, dtype=float)
    mask_row = np.asarray(mask_row, dtype=bool)
    if mask_row.all():
        raise MissingSetEmpty(f"row {row_index} has no missing parts")
    if not mask_row.any():
        raise DegenerateRow(row_index, "no observed parts")
    obs = np.flatnonzero(mask_row)
    mis = np.flatnonzero(~mask_row)
    raw = row[obs]
    if raw.sum() <= 0:
        raise DegenerateRow(row_index)
    budget = missing_total(row, mask_row, row_index)
    sub = raw / raw.sum()

    donor_subs, usable = closed_subrows(np.asarray(complete_rows, dtype=float), obs)
    if not usable.any():
        raise NoDonors(row_index)
    dec = RowDecomposition(sub, budget, tuple(int(j) for j in obs), tuple(int(j) for j in mis))
    return dec, donor_subs, usable


def closed_subrows(rows, columns):
    """Re-close each row restricted to ``columns``; zero-sum rows become ``nan``."""
    sub = rows[:, columns]
    totals = sub.sum(axis=1)
    usable = totals > 0
    out = np.full(sub.shape, np.nan)
    out[usable] = sub[usable] / totals[usable, None]
    return out, usable
