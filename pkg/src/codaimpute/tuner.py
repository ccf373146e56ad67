"""Repeated leave-N-out cross-validation over ``(alpha, k)``.

Each repetition hides ``N`` complete rows behind missingness patterns taken
from the real incomplete rows, imputes them from the remaining complete rows
for every grid pair, and scores the completed rows against the truth. The
pair with the smallest mean score wins.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .distances import DistanceKind, aitchison_to_set, jsd_to_set
from .errors import AlphaZeroConflict, CvInfeasible, MetricZeroConflict
from .frechet import SMALL_ALPHA, zero_alpha_limit
from .imputer import fill_missing, rank_donors
from .simplex import CompositionalTable, MissingnessPattern

logger = logging.getLogger(__name__)

DEFAULT_K_GRID = tuple(range(2, 11))
DEFAULT_REPETITIONS = 50


def default_alpha_grid(has_zeros):
    """``-1, -0.9, ..., 1``, or only the non-negative half when zeros are present."""
    start = 0 if has_zeros else -10
    return tuple(round(i / 10, 1) for i in range(start, 11))


@dataclass(frozen=True)
class CvSettings:
    """Cross-validation settings.

    ``alpha_grid=None`` and ``metric="auto"`` are resolved against the data
    by :meth:`resolve`: JSD scoring and a non-negative grid when any part is
    zero, Aitchison scoring and the full grid otherwise.
    """

    k_grid: tuple = DEFAULT_K_GRID
    alpha_grid: tuple | None = None
    repetitions: int = DEFAULT_REPETITIONS
    metric: str = "auto"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "k_grid", tuple(int(k) for k in self.k_grid))
        if self.alpha_grid is not None:
            object.__setattr__(self, "alpha_grid", tuple(float(a) for a in self.alpha_grid))
            if not self.alpha_grid:
                raise ValueError("alpha grid is empty")
            if any(not -1.0 <= a <= 1.0 for a in self.alpha_grid):
                raise ValueError("alpha grid values must lie in [-1, 1]")
        if not self.k_grid or min(self.k_grid) < 1:
            raise ValueError("k grid must be non-empty with k >= 1")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.metric not in ("auto", "aitchison", "jsd"):
            raise ValueError(f"unknown metric {self.metric!r}")

    def resolve(self, has_zeros):
        """Concrete ``(alpha_grid, metric)`` for data with or without zeros."""
        metric = self.metric
        if metric == "auto":
            metric = "jsd" if has_zeros else "aitchison"
        if metric == "aitchison" and has_zeros:
            raise MetricZeroConflict("Aitchison scoring is undefined for data with zeros")
        grid = self.alpha_grid if self.alpha_grid is not None else default_alpha_grid(has_zeros)
        if has_zeros and min(grid) < 0:
            raise AlphaZeroConflict("negative alpha values are not allowed when the data contain zeros")
        return grid, DistanceKind(metric)

    def with_seed(self, seed):
        return CvSettings(self.k_grid, self.alpha_grid, self.repetitions, self.metric, int(seed))


@dataclass(frozen=True)
class TuningReport:
    """Mean CV score per ``(alpha, k)`` and the selected pair.

    ``per_repetition`` has shape ``(repetitions, len(alpha_grid), len(k_grid))``.
    ``cv_patterns`` lists, per repetition, the pattern assigned to each
    held-out row.
    """

    scores: dict
    best: tuple
    alpha_grid: tuple
    k_grid: tuple
    metric: str
    settings: CvSettings
    n_heldout: int
    per_repetition: np.ndarray = field(repr=False)
    cv_patterns: tuple = field(repr=False, default=())

    def to_json_dict(self):
        return {
            "settings": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self.settings).items()},
            "seed": self.settings.seed,
            "metric": self.metric,
            "n_heldout": self.n_heldout,
            "scores": [
                {"alpha": a, "k": k, "mean_score": self.scores[(a, k)]}
                for a in self.alpha_grid for k in self.k_grid
            ],
            "best": {"alpha": self.best[0], "k": self.best[1]},
        }


@dataclass(frozen=True)
class TuningFallback:
    """Marker for a pattern whose own tuning was infeasible."""

    pattern: MissingnessPattern
    reason: str


#: scores closer than this to the minimum count as tied (round-off level)
TIE_TOLERANCE = 1e-12


def select_best(scores):
    """Smallest score; ties go to the smaller ``k``, then to ``alpha`` nearest 1."""
    low = min(scores.values())
    tied = [ak for ak, s in scores.items() if s <= low + TIE_TOLERANCE]
    return min(tied, key=lambda ak: (ak[1], abs(1.0 - ak[0]), -ak[0]))


def cv_splits(n_complete, patterns, settings):
    """Yield ``(heldout_rows, heldout_patterns)`` for every repetition.

    ``heldout_rows`` indexes the complete rows; one row is drawn per observed
    incomplete row. With a single distinct pattern every held-out row gets
    it; otherwise patterns are sampled from their empirical distribution.
    Each repetition draws from its own ``SeedSequence((seed, rep))`` so the
    splits do not depend on evaluation order.
    """
    patterns = list(patterns)
    N = len(patterns)
    distinct = sorted(set(patterns))
    for rep in range(settings.repetitions):
        rng = np.random.default_rng(np.random.SeedSequence((settings.seed, rep)))
        rows = rng.choice(n_complete, size=N, replace=False)
        if len(distinct) == 1:
            assigned = [distinct[0]] * N
        else:
            assigned = [patterns[j] for j in rng.integers(0, N, size=N)]
        yield rows, assigned


def _check_feasible(n_complete, N, settings):
    if N < 1:
        raise CvInfeasible("no incomplete rows to mimic")
    if n_complete <= N + max(settings.k_grid):
        raise CvInfeasible(
            f"{n_complete} complete rows; leave-{N}-out CV with k up to {max(settings.k_grid)} "
            f"needs more than {N + max(settings.k_grid)}")


def _scores(kind, truth, completed):
    if kind is DistanceKind.JSD:
        return jsd_to_set(truth, completed)
    return aitchison_to_set(truth, completed)


def prefix_frechet_means(donors, alpha, ks):
    """Fréchet means of the first ``k`` donor rows for every ``k`` in ``ks``.

    Shares the per-row power transform across ``k`` through cumulative sums.
    """
    donors = donors / donors.sum(axis=1, keepdims=True)
    if abs(alpha) < SMALL_ALPHA:
        return np.vstack([zero_alpha_limit(donors[:k]) for k in ks])
    ks = np.asarray(ks)
    with np.errstate(divide="ignore"):
        powered = donors ** alpha
        powered /= powered.sum(axis=1, keepdims=True)
        mean = np.cumsum(powered, axis=0)[ks - 1] / ks[:, None]
        if alpha == 1.0:
            return mean / mean.sum(axis=1, keepdims=True)
        logs = np.log(mean) / alpha
    finite = np.isfinite(logs)
    shift = np.where(finite, logs, -np.inf).max(axis=1, keepdims=True)
    out = np.where(finite, np.exp(np.where(finite, logs - shift, 0.0)), 0.0)
    return out / out.sum(axis=1, keepdims=True)


def tune(complete_rows, patterns, settings=None):
    """Select ``(alpha, k)`` by repeated leave-N-out cross-validation.

    Parameters
    ----------
    complete_rows : array_like of shape (n_c, D)
        The complete rows of the data set.
    patterns : sequence of MissingnessPattern
        One entry per incomplete row of the data set; ``N = len(patterns)``.
    settings : CvSettings, optional

    Raises
    ------
    CvInfeasible
        If ``n_c <= N + max(k_grid)``.
    MetricZeroConflict
        If Aitchison scoring is requested for data with zeros.
    """
    settings = settings or CvSettings()
    complete = np.asarray(complete_rows, dtype=float)
    n_c, D = complete.shape
    patterns = list(patterns)
    N = len(patterns)
    _check_feasible(n_c, N, settings)
    has_zeros = bool(np.any(complete == 0))
    alpha_grid, kind = settings.resolve(has_zeros)
    k_grid = settings.k_grid
    kmax = max(k_grid)

    raw = np.zeros((settings.repetitions, len(alpha_grid), len(k_grid)))
    drawn = []
    for rep, (rows, assigned) in enumerate(cv_splits(n_c, patterns, settings)):
        drawn.append(tuple(assigned))
        mask = np.ones((n_c, D), dtype=bool)
        for r, p in zip(rows, assigned):
            mask[r, list(p.missing_columns)] = False
        table = CompositionalTable.from_array(complete, mask, reclose=False)
        part, plans, _ = rank_donors(table)
        for plan in plans:
            if len(plan.order) < kmax:
                raise CvInfeasible(f"held-out row has only {len(plan.order)} usable donors")
            truth = complete[plan.row]
            miss = list(plan.pattern.missing_columns)
            donors = part.complete[plan.order[:kmax]]
            for ai, alpha in enumerate(alpha_grid):
                means = prefix_frechet_means(donors, alpha, k_grid)
                filled = np.tile(truth, (len(k_grid), 1))
                for ki in range(len(k_grid)):
                    filled[ki, miss] = fill_missing(means[ki], miss, plan.missing_total)
                raw[rep, ai] += _scores(kind, truth, filled)
        raw[rep] /= N

    mean = raw.mean(axis=0)
    scores = {(a, k): float(mean[ai, ki]) for ai, a in enumerate(alpha_grid) for ki, k in enumerate(k_grid)}
    return TuningReport(scores, select_best(scores), tuple(alpha_grid), tuple(k_grid), kind.value,
                        settings, N, raw, tuple(drawn))


def tune_per_pattern(complete_rows, patterns_with_counts, settings=None):
    """Run :func:`tune` separately for each missingness pattern.

    ``patterns_with_counts`` maps each pattern to the number of incomplete
    rows showing it (that pattern's ``N``). Patterns are visited in sorted
    order and the ``i``-th uses seed ``settings.seed + i``, so a lone
    pattern reproduces the global tuning exactly. Infeasible patterns map
    to a :class:`TuningFallback`.
    """
    settings = settings or CvSettings()
    for pattern, count in patterns_with_counts.items():
        if int(count) < 1:
            raise ValueError(f"pattern {pattern} has count {count}; counts must be positive")
    out = {}
    for i, pattern in enumerate(sorted(patterns_with_counts)):
        count = int(patterns_with_counts[pattern])
        try:
            out[pattern] = tune(complete_rows, [pattern] * count, settings.with_seed(settings.seed + i))
        except CvInfeasible as exc:
            logger.warning("pattern %s: %s", pattern, exc)
            out[pattern] = TuningFallback(pattern, str(exc))
    return out
