import warnings

import numpy as np
import pytest

from codaimpute.errors import AlphaZeroConflict, CvInfeasible, MetricZeroConflict
from codaimpute.frechet import frechet_mean
from codaimpute.imputer import ImputerConfig, impute
from codaimpute.simplex import CompositionalTable, MissingnessPattern
from codaimpute.simulation import TruthCells, evaluate
from codaimpute.tuner import (
    CvSettings,
    TuningFallback,
    cv_splits,
    default_alpha_grid,
    prefix_frechet_means,
    select_best,
    tune,
    tune_per_pattern,
)

P1 = MissingnessPattern((1,))
P12 = MissingnessPattern((1, 2))
P3 = MissingnessPattern((3,))


def replay_oracle(complete, patterns, settings):
    """Second implementation of the CV loop through the public impute/evaluate path."""
    alpha_grid, kind = settings.resolve(bool(np.any(complete == 0)))
    totals = {(a, k): 0.0 for a in alpha_grid for k in settings.k_grid}
    for rows, assigned in cv_splits(len(complete), patterns, settings):
        mask = np.ones(complete.shape, dtype=bool)
        cells = []
        for r, p in zip(rows, assigned):
            mask[r, list(p.missing_columns)] = False
            cells.extend((int(r), c) for c in p.missing_columns)
        cells.sort()
        truth = TruthCells(np.array([r for r, _ in cells]), np.array([c for _, c in cells]),
                           np.array([complete[r, c] for r, c in cells]))
        table = CompositionalTable.from_array(complete, mask, reclose=False)
        for a in alpha_grid:
            for k in settings.k_grid:
                done = impute(table, ImputerConfig(k=k, alpha=a)).completed_table
                totals[(a, k)] += evaluate(truth, done, metric=kind)
    return {ak: v / settings.repetitions for ak, v in totals.items()}


@pytest.fixture(scope="module")
def dirichlet200():
    return np.random.default_rng(200).dirichlet([5.0, 5.0, 5.0], size=200)


def test_default_grids():
    assert default_alpha_grid(False) == tuple(round(-1 + i / 10, 1) for i in range(21))
    assert default_alpha_grid(True)[0] == 0.0 and len(default_alpha_grid(True)) == 11
    s = CvSettings()
    assert s.k_grid == tuple(range(2, 11)) and s.repetitions == 50


def test_size_one_grids(dirichlet200):
    r = tune(dirichlet200, [P1] * 5, CvSettings(k_grid=(3,), alpha_grid=(0.5,), repetitions=3))
    assert r.best == (0.5, 3) and list(r.scores) == [(0.5, 3)]


def test_identical_rows_tie_rule():
    rows = np.tile([0.2, 0.3, 0.5], (30, 1))
    r = tune(rows, [P1] * 3, CvSettings(k_grid=(2, 3, 4), alpha_grid=(-0.5, 0.0, 0.5, 0.9), repetitions=3))
    assert max(r.scores.values()) < 1e-12
    assert r.best == (0.9, 2)


def test_select_best_tie_rule():
    s = {(0.5, 3): 0.1, (0.9, 3): 0.1, (1.0, 4): 0.1, (-1.0, 3): 0.2}
    assert select_best(s) == (0.9, 3)
    assert select_best({(0.2, 2): 0.3, (0.1, 5): 0.05}) == (0.1, 5)


def test_exhaustive_replay_oracle(dirichlet200):
    settings = CvSettings(k_grid=(2, 3, 4, 6, 8), alpha_grid=(-1.0, -0.5, 0.0, 0.5, 1.0), repetitions=10, seed=17)
    patterns = [P1] * 12
    report = tune(dirichlet200, patterns, settings)
    oracle = replay_oracle(dirichlet200, patterns, settings)
    assert report.metric == "aitchison"
    for ak, v in oracle.items():
        assert report.scores[ak] == pytest.approx(v, rel=1e-10, abs=1e-14)
    assert report.best == min(oracle, key=lambda ak: (oracle[ak], ak[1], abs(1 - ak[0])))


def test_reproducible(dirichlet200):
    s = CvSettings(k_grid=(2, 4), alpha_grid=(0.0, 1.0), repetitions=5, seed=99)
    a, b = tune(dirichlet200, [P1, P12, P1], s), tune(dirichlet200, [P1, P12, P1], s)
    assert a.scores == b.scores and a.best == b.best
    assert np.array_equal(a.per_repetition, b.per_repetition)
    assert a.to_json_dict() == b.to_json_dict()
    c = tune(dirichlet200, [P1, P12, P1], s.with_seed(100))
    assert not np.array_equal(a.per_repetition, c.per_repetition)


def test_mask_fidelity(dirichlet200):
    observed = [P1, P12, P12, P1, P1]
    s = CvSettings(k_grid=(2,), alpha_grid=(1.0,), repetitions=30, seed=4)
    report = tune(dirichlet200, observed, s)
    assert len(report.cv_patterns) == 30
    for rep in report.cv_patterns:
        assert len(rep) == len(observed) and set(rep) <= set(observed)
    for rows, assigned in cv_splits(200, observed, s):
        assert len(set(rows.tolist())) == len(observed)


def test_scores_finite_nonnegative(dirichlet200):
    r = tune(dirichlet200, [P12] * 4, CvSettings(k_grid=(2, 5), repetitions=3))
    v = np.array(list(r.scores.values()))
    assert np.all(np.isfinite(v)) and np.all(v >= 0)
    assert len(r.scores) == 21 * 2


def test_duplicates_give_zero_score_at_that_k():
    base = np.random.default_rng(1).dirichlet([2, 2, 2, 2], size=15)
    k = 3
    # k + 1 copies: after a row is held out, k identical donors remain
    rows = np.repeat(base, k + 1, axis=0)
    r = tune(rows, [P12], CvSettings(k_grid=(k,), alpha_grid=(-1.0, 0.0, 0.5, 1.0), repetitions=5))
    assert max(r.scores.values()) < 1e-12


def test_infeasible():
    rows = np.random.default_rng(0).dirichlet([1, 1, 1], size=12)
    with pytest.raises(CvInfeasible):
        tune(rows, [P1] * 2, CvSettings(k_grid=tuple(range(2, 11))))


def test_metric_conflicts():
    rows = np.random.default_rng(0).dirichlet([1, 1, 1], size=40)
    rows[0] = [0.0, 0.5, 0.5]
    with pytest.raises(MetricZeroConflict):
        tune(rows, [P1], CvSettings(k_grid=(2,), metric="aitchison"))
    with pytest.raises(AlphaZeroConflict):
        tune(rows, [P1], CvSettings(k_grid=(2,), alpha_grid=(-0.5, 0.5)))
    r = tune(rows, [P1] * 2, CvSettings(k_grid=(2,), repetitions=2))
    assert r.metric == "jsd" and min(r.alpha_grid) == 0.0


@pytest.mark.parametrize("alpha", [-1.0, -0.3, 0.0, 1e-9, 0.4, 1.0])
def test_prefix_means_match_direct(alpha):
    donors = np.random.default_rng(2).dirichlet([1, 2, 3, 4], size=10)
    if alpha >= 0:
        donors[3, 1] = 0.0
    ks = (1, 2, 5, 10)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        direct = np.vstack([frechet_mean(donors[:k], alpha) for k in ks])
    np.testing.assert_allclose(prefix_frechet_means(donors, alpha, ks), direct, rtol=1e-10, atol=1e-14)


class TestPerPattern:
    def test_single_pattern_identical_to_tune(self, dirichlet200):
        s = CvSettings(k_grid=(2, 3), alpha_grid=(0.5, 1.0), repetitions=4, seed=5)
        out = tune_per_pattern(dirichlet200, {P12: 6}, s)
        ref = tune(dirichlet200, [P12] * 6, s)
        assert list(out) == [P12]
        assert out[P12].scores == ref.scores and out[P12].best == ref.best

    def test_two_patterns_independent_masks(self, dirichlet200):
        rows = np.hstack([dirichlet200, np.random.default_rng(3).uniform(0.1, 1, (200, 1))])
        rows /= rows.sum(axis=1, keepdims=True)
        s = CvSettings(k_grid=(2, 3), alpha_grid=(1.0,), repetitions=3, seed=5)
        out = tune_per_pattern(rows, {P12: 5, P3: 5}, s)
        assert set(out) == {P12, P3}
        assert all(set(rep) == {p} for p in out for rep in out[p].cv_patterns)
        splits = [[r.tolist() for r, _ in cv_splits(200, [p] * 5, out[p].settings)] for p in (P12, P3)]
        assert splits[0] != splits[1]

    def test_count_zero_rejected(self, dirichlet200):
        with pytest.raises(ValueError):
            tune_per_pattern(dirichlet200, {P1: 0}, CvSettings())

    def test_infeasible_marked(self):
        rows = np.random.default_rng(0).dirichlet([1, 1, 1], size=12)
        out = tune_per_pattern(rows, {P1: 1, P12: 5}, CvSettings(k_grid=(2, 3, 4, 5, 6, 7, 8, 9, 10), repetitions=2))
        assert isinstance(out[P12], TuningFallback)
        assert not isinstance(out[P1], TuningFallback)
