import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from codaimpute.errors import (
    DegenerateInput,
    DegenerateRow,
    InconsistentRow,
    MissingSetEmpty,
    NegativeValue,
    NoDonors,
)
from codaimpute.simplex import (
    CompositionalTable,
    MissingnessPattern,
    closure,
    decompose_row,
    missing_total,
    partition,
)

from conftest import WORKED

positive_vectors = arrays(float, st.integers(2, 12), elements=st.floats(1e-6, 1e6))


class TestClosure:
    def test_worked_observed_subvector(self):
        np.testing.assert_allclose(closure([0.2, 0.3, 0.1]), [1 / 3, 1 / 2, 1 / 6], rtol=1e-15)

    def test_already_closed_unchanged(self):
        x = np.array([0.25, 0.25, 0.25, 0.25])
        assert np.array_equal(closure(x), x)

    def test_scale(self):
        np.testing.assert_allclose(closure([2, 6, 2]), [0.2, 0.6, 0.2], rtol=1e-15)

    def test_rows_of_matrix(self):
        out = closure([[1, 1], [1, 3]])
        np.testing.assert_allclose(out, [[0.5, 0.5], [0.25, 0.75]])

    @pytest.mark.parametrize("raw", [[0, 0, 0], [0.0]])
    def test_all_zero(self, raw):
        with pytest.raises(DegenerateInput):
            closure(raw)

    def test_negative(self):
        with pytest.raises(NegativeValue):
            closure([0.5, -0.1, 0.6])

    @given(positive_vectors)
    def test_idempotent_exactly(self, x):
        c = closure(x)
        assert np.array_equal(closure(c), c)

    @given(positive_vectors, st.floats(1e-3, 1e3))
    def test_scale_invariant(self, x, c):
        np.testing.assert_allclose(closure(c * x), closure(x), rtol=0, atol=1e-12)

    @given(positive_vectors)
    def test_sums_to_one(self, x):
        assert abs(closure(x).sum() - 1) < 1e-9


class TestTable:
    def test_reclose_and_note(self):
        t = CompositionalTable.from_array([[2.0, 2.0], [0.5, 0.5]])
        np.testing.assert_allclose(t.values, [[0.5, 0.5], [0.5, 0.5]])
        assert [n.kind for n in t.notes] == ["reclosed"]
        assert t.notes[0].row == 0

    def test_immutable(self, worked_table):
        with pytest.raises(ValueError):
            worked_table.values[1, 1] = 0.5

    def test_negative_rejected(self):
        with pytest.raises(NegativeValue):
            CompositionalTable.from_array([[0.5, -0.5, 1.0]])

    def test_shape_mismatch(self):
        from codaimpute.errors import DimensionMismatch
        with pytest.raises(DimensionMismatch):
            CompositionalTable.from_array(np.ones((2, 3)), np.ones((3, 2), bool))

    def test_patterns(self, worked_table):
        assert worked_table.patterns() == {0: MissingnessPattern((1, 4))}


class TestPattern:
    def test_empty_rejected(self):
        with pytest.raises(MissingSetEmpty):
            MissingnessPattern(())

    def test_not_increasing(self):
        with pytest.raises(ValueError):
            MissingnessPattern((3, 1))

    def test_observed_columns(self):
        assert MissingnessPattern((1, 4)).observed_columns(5) == (0, 2, 3)

    def test_hash_eq(self):
        assert {MissingnessPattern((1, 2)): 1}[MissingnessPattern([1, 2])] == 1


class TestPartition:
    def test_worked_example(self, worked_table):
        p = partition(worked_table)
        assert list(p.incomplete_index) == [0]
        assert list(p.complete_index) == [1, 2, 3]

    def test_fully_complete(self):
        p = partition(CompositionalTable.from_array(np.full((3, 2), 0.5)))
        assert len(p.incomplete_index) == 0 and len(p.complete_index) == 3

    def test_single_missing_row(self):
        p = partition(CompositionalTable.from_array([[np.nan, np.nan]]))
        assert len(p.complete_index) == 0 and list(p.incomplete_index) == [0]

    @settings(max_examples=50)
    @given(arrays(bool, st.tuples(st.integers(1, 20), st.integers(2, 6))))
    def test_bijection(self, mask):
        values = np.full(mask.shape, 1.0 / mask.shape[1])
        t = CompositionalTable.from_array(values, mask)
        p = partition(t)
        idx = np.concatenate([p.complete_index, p.incomplete_index])
        assert sorted(idx) == list(range(mask.shape[0]))
        np.testing.assert_array_equal(p.reassemble(mask.shape[1]), t.values)


class TestDecompose:
    def test_worked_example(self, worked_table):
        p = partition(worked_table)
        dec, subs, usable = decompose_row(p.incomplete[0], p.incomplete_mask[0], p.complete)
        np.testing.assert_allclose(dec.observed_sub, [1 / 3, 1 / 2, 1 / 6], rtol=1e-14)
        assert dec.missing_total == pytest.approx(0.4, abs=1e-15)
        assert dec.observed_columns == (0, 2, 3) and dec.missing_columns == (1, 4)
        np.testing.assert_allclose(subs, [[1 / 6, 2 / 3, 1 / 6], [0.4, 0.4, 0.2], [1 / 6, 1 / 2, 1 / 3]],
                                   rtol=1e-14)
        assert usable.all()

    def test_complete_row_rejected(self, worked_table):
        with pytest.raises(MissingSetEmpty):
            decompose_row(WORKED[1], np.ones(5, bool), WORKED[1:])

    def test_zero_donor_excluded(self):
        # a zero-sum sub-vector cannot be closed, so no divergence to it exists
        donors = np.array([[0.0, 0.0, 0.5, 0.5], [0.25, 0.25, 0.25, 0.25]])
        row = np.array([0.2, 0.2, np.nan, np.nan])
        dec, subs, usable = decompose_row(row, ~np.isnan(row), donors)
        assert list(usable) == [False, True]
        assert np.isnan(subs[0]).all()
        with pytest.raises(DegenerateInput):
            closure(donors[0, :2])

    def test_no_donors(self):
        donors = np.array([[0.0, 0.0, 1.0]])
        with pytest.raises(NoDonors):
            decompose_row(np.array([0.5, 0.2, np.nan]), np.array([True, True, False]), donors)

    def test_degenerate_row(self):
        with pytest.raises(DegenerateRow):
            decompose_row(np.array([0.0, 0.0, np.nan]), np.array([True, True, False]), np.full((2, 3), 1 / 3))

    def test_inconsistent_row(self):
        with pytest.raises(InconsistentRow):
            missing_total(np.array([0.7, 0.6, np.nan]), np.array([True, True, False]))

    def test_budget_clamped(self):
        assert missing_total(np.array([0.5, 0.5 + 1e-9, np.nan]), np.array([True, True, False])) == 0.0

    @given(arrays(float, st.integers(3, 10), elements=st.floats(0.01, 1.0)), st.data())
    def test_observed_plus_budget_is_one(self, x, data):
        x = closure(x)
        D = len(x)
        mask = np.array(data.draw(st.lists(st.booleans(), min_size=D, max_size=D)))
        mask[0], mask[-1] = True, False
        assert abs(x[mask].sum() + missing_total(x, mask) - 1) < 1e-9
