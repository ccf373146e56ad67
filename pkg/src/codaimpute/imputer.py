"""k-NN imputation of missing parts in compositional tables.

The main entry point is :func:`impute`: for each incomplete row, complete
rows are ranked by the Jensen-Shannon divergence between re-closed observed
sub-vectors, the ``k`` nearest full rows are averaged with a Fréchet mean,
and the average's missing-position parts are re-closed and scaled to the
row's unallocated mass. :func:`impute_baseline_aitchison` runs the same
pipeline with Aitchison distance and a plain mean/median of the donors.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .distances import DistanceKind, aitchison_to_set, jsd_to_set
from .errors import DegenerateRow, InsufficientDonors, NoDonors, ZeroInLogRatio
from .frechet import frechet_mean
from .simplex import (
    MissingnessPattern,
    _note,
    closed_subrows,
    missing_total,
    partition,
)

logger = logging.getLogger(__name__)

DEFAULT_K = 2


@dataclass(frozen=True)
class ImputerConfig:
    """Hyper-parameters of the imputer.

    ``per_pattern_params`` maps a :class:`MissingnessPattern` to its own
    ``(alpha, k)``; rows with any other pattern use the global pair.
    """

    k: int = DEFAULT_K
    alpha: float = 1.0
    adaptive: bool = False
    per_pattern_params: dict | None = None

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        if not -1.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [-1, 1], got {self.alpha}")
        for pattern, (a, k) in (self.per_pattern_params or {}).items():
            if k < 1 or not -1.0 <= a <= 1.0:
                raise ValueError(f"invalid parameters {(a, k)} for pattern {pattern}")

    def params_for(self, pattern):
        if self.adaptive and self.per_pattern_params and pattern in self.per_pattern_params:
            a, k = self.per_pattern_params[pattern]
            return float(a), int(k)
        return float(self.alpha), int(self.k)


@dataclass(frozen=True)
class DonorRecord:
    """Which complete rows served an incomplete row, and with what parameters."""

    row: int
    pattern: MissingnessPattern
    donors: tuple
    distances: tuple
    alpha: float | None
    k: int

    def as_dict(self):
        return {
            "row": self.row,
            "pattern": list(self.pattern.missing_columns),
            "donors": list(self.donors),
            "distances": list(self.distances),
            "alpha": self.alpha,
            "k": self.k,
        }


@dataclass(frozen=True)
class ImputationResult:
    completed_table: object
    imputed_cells: tuple
    donor_log: tuple
    notes: tuple = field(default=())


@dataclass
class RowPlan:
    """Donor ranking for one incomplete row, independent of ``alpha`` and ``k``.

    ``order`` indexes the complete partition, nearest first, restricted to
    usable donors; ``distances`` is aligned with it.
    """

    row: int
    pattern: MissingnessPattern
    missing_total: float
    order: np.ndarray
    distances: np.ndarray


def rank_donors(table, kind=DistanceKind.JSD, skip_zero_donors=False):
    """Rank the complete rows of ``table`` for every incomplete row.

    Donor sub-vectors are built once per missingness pattern. Ties in
    distance keep the original row order.

    Returns
    -------
    part : Partition
    plans : list of RowPlan, in increasing row order
    notes : list of Note
    """
    kind = DistanceKind.parse(kind)
    part = partition(table)
    plans, notes = [], []
    if len(part.incomplete_index) == 0:
        return part, plans, notes
    D = table.n_parts
    by_pattern = {}
    for pos, i in enumerate(part.incomplete_index):
        by_pattern.setdefault(MissingnessPattern.from_mask_row(part.incomplete_mask[pos]), []).append(pos)

    for pattern, positions in by_pattern.items():
        obs = np.asarray(pattern.observed_columns(D), dtype=int)
        donor_subs, usable = closed_subrows(part.complete, obs)
        for j in np.flatnonzero(~usable):
            notes.append(_note("donor_excluded",
                               f"complete row {int(part.complete_index[j])} is all zero on "
                               f"observed columns of pattern {pattern}"))
        if kind is DistanceKind.AITCHISON:
            positive = np.all(donor_subs > 0, axis=1) & usable
            if not skip_zero_donors and not positive[usable].all():
                j = np.flatnonzero(usable & ~positive)[0]
                raise ZeroInLogRatio(
                    f"donor row {int(part.complete_index[j])} has a zero part on pattern {pattern}")
            usable = positive
        candidates = np.flatnonzero(usable)
        subs = donor_subs[candidates]

        for pos in positions:
            i = int(part.incomplete_index[pos])
            if len(obs) == 0:
                raise NoDonors(i)
            raw = part.incomplete[pos, obs]
            total = raw.sum()
            if total <= 0:
                raise DegenerateRow(i)
            budget = missing_total(part.incomplete[pos], part.incomplete_mask[pos], i)
            if len(candidates) == 0:
                raise NoDonors(i)
            target = raw / total
            if kind is DistanceKind.JSD:
                dist = jsd_to_set(target, subs)
            else:
                if np.any(target <= 0):
                    raise ZeroInLogRatio("observed sub-vector has a zero part", row=i)
                dist = aitchison_to_set(target, subs)
            rank = np.argsort(dist, kind="stable")
            plans.append(RowPlan(i, pattern, budget, candidates[rank], dist[rank]))
    plans.sort(key=lambda p: p.row)
    return part, plans, notes


def fill_missing(aggregate, missing_columns, budget, row=None, notes=None):
    """Re-close ``aggregate`` on ``missing_columns`` and scale it to ``budget``."""
    cols = list(missing_columns)
    share = np.asarray(aggregate, dtype=float)[cols]
    if budget == 0.0:
        if notes is not None:
            notes.append(_note("zero_budget", "observed parts already sum to 1; missing parts set to 0", row))
        return np.zeros(len(cols))
    total = share.sum()
    if total <= 0:
        if notes is not None:
            notes.append(_note("zero_donor_mass",
                               "donors are all zero on the missing parts; budget split evenly", row))
        return np.full(len(cols), budget / len(cols))
    return share / total * budget


def _donor_aggregate(donor_rows, alpha, aggregation):
    if aggregation == "frechet":
        return frechet_mean(donor_rows, alpha)
    if aggregation == "mean":
        return donor_rows.mean(axis=0)
    if aggregation == "median":
        return np.median(donor_rows, axis=0)
    raise ValueError(f"unknown aggregation {aggregation!r}")


def _complete(table, part, plans, params_for, aggregation, notes):
    values = np.array(table.values, copy=True)
    cells, log = [], []
    for plan in plans:
        alpha, k = params_for(plan.pattern)
        if len(plan.order) < k:
            raise InsufficientDonors(plan.row, len(plan.order), k)
        chosen = plan.order[:k]
        donors = part.complete[chosen]
        agg = _donor_aggregate(donors, alpha, aggregation)
        fill = fill_missing(agg, plan.pattern.missing_columns, plan.missing_total, plan.row, notes)
        for c, v in zip(plan.pattern.missing_columns, fill):
            values[plan.row, c] = v
            cells.append((plan.row, c, float(v)))
        log.append(DonorRecord(
            plan.row, plan.pattern,
            tuple(int(d) for d in part.complete_index[chosen]),
            tuple(float(d) for d in plan.distances[:k]),
            alpha if aggregation == "frechet" else None, k,
        ))
    completed = table.with_values(values, np.ones(table.shape, dtype=bool), notes)
    return ImputationResult(completed, tuple(cells), tuple(log), tuple(notes))


def impute(table, config=None):
    """Impute every missing cell of ``table`` with JSD k-NN and a Fréchet mean.

    Observed cells are copied through unchanged. With ``alpha = 1`` this is
    plain JSD k-NN (arithmetic mean of the donors).

    Raises
    ------
    InsufficientDonors
        If a row has fewer than ``k`` usable complete rows.
    DegenerateRow, NoDonors, InconsistentRow
        From the row decomposition.
    """
    config = config or ImputerConfig()
    part, plans, notes = rank_donors(table, DistanceKind.JSD)
    return _complete(table, part, plans, config.params_for, "frechet", notes)


def impute_k_range(table, ks, alpha=1.0):
    """Impute once per ``k`` in ``ks``, ranking donors a single time.

    Returns a dict ``k -> ImputationResult``.
    """
    part, plans, notes = rank_donors(table, DistanceKind.JSD)
    return {
        int(k): _complete(table, part, plans, lambda _p, k=int(k): (float(alpha), k), "frechet", list(notes))
        for k in ks
    }


def impute_baseline_aitchison(table, k=DEFAULT_K, aggregation="mean", skip_zero_donors=False):
    """Aitchison-distance k-NN with an unweighted mean or median of the donors.

    A simplified stand-in for robust k-NN comparators: donors are ranked by
    Aitchison distance between re-closed observed sub-vectors and their full
    rows are aggregated coordinate-wise before the same budget scaling used
    by :func:`impute`.

    Raises
    ------
    ZeroInLogRatio
        If a needed sub-vector has a zero part (donors with zeros are dropped
        instead when ``skip_zero_donors`` is set).
    """
    if aggregation not in ("mean", "median"):
        raise ValueError(f"aggregation must be 'mean' or 'median', got {aggregation!r}")
    part, plans, notes = rank_donors(table, DistanceKind.AITCHISON, skip_zero_donors)
    return _complete(table, part, plans, lambda _p: (None, int(k)), aggregation, notes)


def impute_adaptive(table, settings=None, fallback=None, tuner=None):
    """Tune ``(alpha, k)`` separately for each missingness pattern, then impute.

    ``tuner`` defaults to :func:`codaimpute.tuner.tune_per_pattern`. Patterns
    whose tuning is infeasible use a global pair, itself tuned over all
    incomplete rows when possible and otherwise taken from ``fallback``.
    """
    from . import tuner as _tuner

    tuner = tuner or _tuner.tune_per_pattern
    fallback = fallback or ImputerConfig()
    part = partition(table)
    patterns = table.patterns()
    counts = {}
    for p in patterns.values():
        counts[p] = counts.get(p, 0) + 1
    if not counts:
        return impute(table, fallback)

    reports = tuner(part.complete, counts, settings)
    notes = []
    params = {}
    global_pair = None
    for pattern, report in reports.items():
        if isinstance(report, _tuner.TuningFallback):
            if global_pair is None:
                try:
                    g = _tuner.tune(part.complete, [patterns[i] for i in sorted(patterns)], settings)
                    global_pair = g.best
                except _tuner.CvInfeasible:
                    global_pair = (fallback.alpha, fallback.k)
            notes.append(_note("fallback", f"pattern {pattern}: {report.reason}; "
                               f"using global (alpha, k) = {global_pair}"))
            params[pattern] = global_pair
        else:
            params[pattern] = report.best
    config = ImputerConfig(k=fallback.k, alpha=fallback.alpha, adaptive=True, per_pattern_params=params)
    result = impute(table, config)
    return ImputationResult(result.completed_table, result.imputed_cells, result.donor_log,
                            tuple(notes) + result.notes)
