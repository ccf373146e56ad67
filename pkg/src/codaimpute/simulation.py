"""Missingness injection, synthetic Dirichlet data, scoring and timing.

Injectors take a complete :class:`CompositionalTable` and return the masked
table together with :class:`TruthCells`, which restore it exactly.
"""

from __future__ import annotations

import enum
import math
import statistics
import time
from dataclasses import asdict, dataclass

import numpy as np

from .distances import DistanceKind, aitchison_distance, jsd
from .errors import DegenerateSpec, MetricZeroConflict, TooFewRows
from .simplex import CompositionalTable

DIRICHLET_RANGE = (0.5, 5.0)


class Mechanism(str, enum.Enum):
    MCAR = "mcar"
    MAR_SORTED = "mar-sorted"
    AGGREGATE = "aggregate"


@dataclass(frozen=True)
class InjectionSpec:
    mechanism: Mechanism = Mechanism.MCAR
    row_fraction: float = 0.10
    component_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mechanism", Mechanism(self.mechanism))
        if not 0 < self.row_fraction <= 1:
            raise DegenerateSpec(f"row_fraction must be in (0, 1], got {self.row_fraction}")
        if not 0 < self.component_fraction < 1:
            raise DegenerateSpec(f"component_fraction must be in (0, 1), got {self.component_fraction}")


@dataclass(frozen=True)
class TruthCells:
    """The hidden cells of an injection, in row-major order.

    ``rows[i], cols[i]`` held ``values[i]`` in the original table.
    """

    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    @property
    def masked_rows(self):
        return np.unique(self.rows)

    def restore(self, masked):
        """Put the true values back into ``masked`` (exact round trip)."""
        values = np.array(masked.values, copy=True)
        mask = np.array(masked.mask, copy=True)
        values[self.rows, self.cols] = self.values
        mask[self.rows, self.cols] = True
        return masked.with_values(values, mask)


def _count(fraction, total):
    # "fraction of total", rounded half up; fractions are snapped to avoid 3.0000000000000004
    return math.floor(round(fraction * total, 9) + 0.5)


def components_to_mask(D, fraction):
    """Cells hidden per selected row: ``ceil(fraction * D)``, capped at ``D - 1``."""
    return min(math.ceil(round(fraction * D, 9)), D - 1)


def _require_complete(table):
    if table.has_missing:
        raise DegenerateSpec("injection needs a complete table")


def _apply(table, cells):
    cells = sorted(cells)
    rows = np.array([r for r, _ in cells], dtype=int)
    cols = np.array([c for _, c in cells], dtype=int)
    truth = TruthCells(rows, cols, np.array(table.values[rows, cols], copy=True))
    mask = np.array(table.mask, copy=True)
    mask[rows, cols] = False
    values = np.array(table.values, copy=True)
    values[rows, cols] = np.nan
    return table.with_values(values, mask), truth


def inject_mcar(table, spec=None, rng=None):
    """Hide a random set of cells independently of their values.

    ``row_fraction`` of the rows are drawn uniformly and, in each,
    ``ceil(component_fraction * D)`` components are drawn uniformly.
    """
    spec = spec or InjectionSpec()
    _require_complete(table)
    n, D = table.shape
    n_rows = _count(spec.row_fraction, n)
    n_cols = components_to_mask(D, spec.component_fraction)
    if n_rows < 1 or n_cols < 1:
        raise DegenerateSpec(f"spec selects {n_rows} rows x {n_cols} components of a {n}x{D} table")
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    rows = rng.choice(n, size=n_rows, replace=False)
    cells = [(int(r), int(c)) for r in rows for c in rng.choice(D, size=n_cols, replace=False)]
    return _apply(table, cells)


def mar_patterns(D, split=None):
    """The two complementary patterns used by :func:`inject_mar_sorted`.

    Column 0 drives the mechanism and is never masked. The remaining columns
    are cut into a leading block of ``split`` columns (default
    ``max(1, (D - 1) // 2)``) and the trailing rest.
    """
    if D < 3:
        raise DegenerateSpec("two disjoint patterns need at least three components")
    split = max(1, (D - 1) // 2) if split is None else int(split)
    if not 1 <= split <= D - 2:
        raise DegenerateSpec(f"split must be in [1, {D - 2}], got {split}")
    return tuple(range(1, 1 + split)), tuple(range(1 + split, D))


def inject_mar_sorted(table, spec=None, split=None, rng=None):
    """Two-pattern missingness driven by the rank of the first component.

    Rows are ranked by their first part. In the lower half ``row_fraction``
    of the rows lose the first pattern's columns, in the upper half the same
    fraction lose the complementary columns. The output keeps the input row
    order.
    """
    spec = spec or InjectionSpec(Mechanism.MAR_SORTED)
    _require_complete(table)
    n, D = table.shape
    if n < 2:
        raise TooFewRows(f"need at least 2 rows, got {n}")
    first, second = mar_patterns(D, split)
    order = np.argsort(table.values[:, 0], kind="stable")
    halves = (order[: n // 2], order[n // 2:])
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    cells = []
    for half, cols in zip(halves, (first, second)):
        m = _count(spec.row_fraction, len(half))
        if m < 1:
            raise DegenerateSpec(f"row_fraction selects no row out of {len(half)}")
        for r in rng.choice(half, size=m, replace=False):
            cells.extend((int(r), c) for c in cols)
    return _apply(table, cells)


def inject_aggregation(table, group, rows):
    """Hide the members of a column group in selected rows.

    The group's total stays known as the row's unallocated mass, which is
    what the imputer then splits back into the member columns.

    Parameters
    ----------
    group : sequence of int
        At least two column indices, not all columns.
    rows : array_like of int or bool
        Row indices, or a boolean selector of length ``n``.

    Returns
    -------
    masked : CompositionalTable
    truth : TruthCells
    totals : ndarray
        Group total of each selected row, in sorted row order.
    """
    _require_complete(table)
    n, D = table.shape
    group = sorted({int(c) for c in group})
    if len(group) < 2 or len(group) >= D or group[0] < 0 or group[-1] >= D:
        raise DegenerateSpec(f"invalid column group {group} for D={D}")
    rows = np.asarray(rows)
    if rows.dtype == bool:
        rows = np.flatnonzero(rows)
    rows = np.unique(rows.astype(int))
    if len(rows) == 0:
        raise DegenerateSpec("no rows selected for aggregation")
    masked, truth = _apply(table, [(int(r), c) for r in rows for c in group])
    totals = table.values[np.ix_(rows, group)].sum(axis=1)
    return masked, truth, totals


def generate_dirichlet(n, D, seed=0, concentration=None, low=DIRICHLET_RANGE[0], high=DIRICHLET_RANGE[1]):
    """``n`` Dirichlet compositions with ``D`` parts.

    Without ``concentration`` the parameters are drawn once from
    ``uniform(low, high)``.
    """
    if n < 1 or D < 2:
        raise ValueError(f"need n >= 1 and D >= 2, got n={n}, D={D}")
    rng = np.random.default_rng(seed)
    if concentration is None:
        concentration = rng.uniform(low, high, size=D)
    concentration = np.broadcast_to(np.asarray(concentration, dtype=float), (D,))
    x = rng.dirichlet(concentration, size=n)
    return CompositionalTable.from_array(x / x.sum(axis=1, keepdims=True),
                                         column_names=[f"x{j + 1}" for j in range(D)])


def evaluate(truth, completed, metric=DistanceKind.AITCHISON):
    """Mean distance between true and completed rows over the masked rows.

    The true rows are rebuilt from ``completed`` with the hidden cells put
    back, so observed cells must have been left untouched by the imputer.

    Raises
    ------
    MetricZeroConflict
        If Aitchison scoring meets a zero part.
    """
    metric = DistanceKind.parse(metric)
    values = completed.values if isinstance(completed, CompositionalTable) else np.asarray(completed)
    rows = truth.masked_rows
    if len(rows) == 0:
        raise DegenerateSpec("no masked rows to evaluate")
    true_rows = np.array(values[rows], copy=True)
    pos = {int(r): i for i, r in enumerate(rows)}
    for r, c, v in zip(truth.rows, truth.cols, truth.values):
        true_rows[pos[int(r)], c] = v
    imputed = values[rows]
    if metric is DistanceKind.AITCHISON:
        if np.any(true_rows <= 0) or np.any(imputed <= 0):
            raise MetricZeroConflict("Aitchison scoring met a zero part; use JSD")
        d = [aitchison_distance(t, c) for t, c in zip(true_rows, imputed)]
    else:
        d = [jsd(t / t.sum(), c / c.sum()) for t, c in zip(true_rows, imputed)]
    return float(np.mean(d))


@dataclass(frozen=True)
class EvaluationRecord:
    """Error and wall-clock time of one method on one data size.

    ``duration`` is the mean wall-clock seconds per repetition of the whole
    ``k`` sweep; ``median_duration`` is the median of the same samples.
    ``mean_distance`` is ``None`` when the method failed (see ``failure``).
    """

    method: str
    n: int
    D: int
    k: int
    alpha: float | None
    mean_distance: float | None
    repetitions: int
    duration: float
    median_duration: float
    failure: str | None = None

    def as_dict(self):
        return asdict(self)


def benchmark(methods, sizes, ks=tuple(range(2, 11)), repetitions=20, spec=None, seed=0,
              metric=DistanceKind.JSD, clock=time.perf_counter):
    """Time and score imputation methods over a grid of data sizes.

    Parameters
    ----------
    methods : dict
        ``name -> callable(table, ks)`` returning ``{k: ImputationResult}``
        for the whole sweep over ``ks``. Only that call is timed.
    sizes : sequence of (n, D)
    spec : InjectionSpec, optional
        Missingness injected into each synthetic table (MCAR); defaults to
        10% of rows with 30% of their components.

    Returns
    -------
    list of EvaluationRecord
        One per method, size and ``k``. Methods run one after another, never
        concurrently, and a failing method is recorded, not raised.
    """
    if not methods:
        raise ValueError("no methods to benchmark")
    spec = spec or InjectionSpec(Mechanism.MCAR, 0.10, 0.30, seed)
    metric = DistanceKind.parse(metric)
    records = []
    root = np.random.SeedSequence(seed)
    for (n, D), size_seq in zip(sizes, root.spawn(len(sizes))):
        errors = {name: {k: [] for k in ks} for name in methods}
        times = {name: [] for name in methods}
        failures = {}
        for rep_seq in size_seq.spawn(repetitions):
            data_seq, inj_seq = rep_seq.spawn(2)
            table = generate_dirichlet(n, D, seed=data_seq)
            masked, truth = inject_mcar(table, spec, rng=np.random.default_rng(inj_seq))
            for name, method in methods.items():
                if name in failures:
                    continue
                try:
                    t0 = clock()
                    results = method(masked, ks)
                    times[name].append(clock() - t0)
                    for k in ks:
                        errors[name][k].append(evaluate(truth, results[k].completed_table, metric=metric))
                except Exception as exc:  # recorded per cell, benchmark carries on
                    failures[name] = f"{type(exc).__name__}: {exc}"
        for name in methods:
            samples = times[name] or [float("nan")]
            for k in ks:
                errs = errors[name][k]
                records.append(EvaluationRecord(
                    name, int(n), int(D), int(k), None,
                    float(np.mean(errs)) if errs and name not in failures else None,
                    len(times[name]), float(np.mean(samples)), float(statistics.median(samples)),
                    failures.get(name),
                ))
    return records


def speedup_table(records, slow, fast):
    """Ratio ``duration(slow) / duration(fast)`` per ``(n, D)``.

    Returns ``(ns, Ds, grid)`` with ``grid[i][j]`` for ``ns[i]``, ``Ds[j]``
    (``nan`` where a size is missing), the layout of a speed-up table with
    one row per sample size and one column per dimension.
    """
    dur = {}
    for r in records:
        dur.setdefault((r.method, r.n, r.D), r.duration)
    ns = sorted({r.n for r in records})
    Ds = sorted({r.D for r in records})
    grid = []
    for n in ns:
        row = []
        for D in Ds:
            a, b = dur.get((slow, n, D)), dur.get((fast, n, D))
            row.append(a / b if a is not None and b not in (None, 0) else float("nan"))
        grid.append(row)
    return ns, Ds, grid
