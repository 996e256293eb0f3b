import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boostwood.data import (DataError, Dataset, load_csv, load_query_csv,
                            make_folds, save_csv)


def _write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_target_by_name(self, tmp_path):
        path = _write(tmp_path, "x,y\n1,2\n3,4\n")
        ds = load_csv(path, "y")
        assert ds.features.tolist() == [[1.0], [3.0]]
        assert ds.response.tolist() == [2.0, 4.0]
        assert ds.feature_names == ("x",)

    def test_target_by_index_no_header(self, tmp_path):
        path = _write(tmp_path, "1,2,10\n3,4,20\n")
        ds = load_csv(path, 2, has_header=False)
        assert ds.features.tolist() == [[1.0, 2.0], [3.0, 4.0]]
        assert ds.response.tolist() == [10.0, 20.0]

    def test_row_order_preserved(self, tmp_path):
        path = _write(tmp_path, "x,y\n9,1\n5,2\n7,3\n")
        ds = load_csv(path, "y")
        assert ds.features[:, 0].tolist() == [9.0, 5.0, 7.0]

    def test_bad_cell_names_row_and_column(self, tmp_path):
        path = _write(tmp_path, "x,y\n1,2\n3,abc\n")
        with pytest.raises(DataError, match=r"row 2.*column y"):
            load_csv(path, "y")

    def test_missing_target(self, tmp_path):
        path = _write(tmp_path, "x,y\n1,2\n")
        with pytest.raises(DataError, match="not in header"):
            load_csv(path, "z")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="no such file"):
            load_csv(tmp_path / "absent.csv", "y")

    def test_empty_file(self, tmp_path):
        path = _write(tmp_path, "")
        with pytest.raises(DataError, match="empty"):
            load_csv(path, "y")

    def test_header_only(self, tmp_path):
        path = _write(tmp_path, "x,y\n")
        with pytest.raises(DataError, match="no data rows"):
            load_csv(path, "y")

    def test_ragged_row(self, tmp_path):
        path = _write(tmp_path, "x,y\n1,2\n3,4,5\n")
        with pytest.raises(DataError, match="row 2"):
            load_csv(path, "y")

    def test_non_finite_rejected(self, tmp_path):
        path = _write(tmp_path, "x,y\n1,2\nnan,4\n")
        with pytest.raises(DataError, match="non-finite"):
            load_csv(path, "y")

    def test_single_column_rejected(self, tmp_path):
        path = _write(tmp_path, "y\n1\n2\n")
        with pytest.raises(DataError, match="two columns"):
            load_csv(path, "y")

    def test_name_without_header_rejected(self, tmp_path):
        path = _write(tmp_path, "1,2\n")
        with pytest.raises(DataError, match="no header"):
            load_csv(path, "y", has_header=False)


class TestDatasetInvariants:
    def test_length_mismatch(self):
        with pytest.raises(DataError, match="row mismatch"):
            Dataset(np.ones((3, 2)), np.ones(2))

    def test_non_finite(self):
        with pytest.raises(DataError, match="non-finite"):
            Dataset(np.array([[np.inf]]), np.array([1.0]))

    def test_immutable(self):
        ds = Dataset(np.ones((2, 2)), np.ones(2))
        with pytest.raises(ValueError):
            ds.features[0, 0] = 3.0

    def test_subset(self):
        ds = Dataset(np.arange(6.0).reshape(3, 2), np.array([1.0, 2.0, 3.0]))
        sub = ds.subset([2, 0])
        assert sub.response.tolist() == [3.0, 1.0]


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 40), st.integers(1, 4), st.integers(0, 2 ** 32))
def test_csv_round_trip_is_exact(tmp_path_factory, n, d, seed):
    rng = np.random.default_rng(seed)
    # adversarial magnitudes: exact round-trip must hold for any finite double
    X = rng.normal(scale=10.0 ** rng.integers(-12, 12), size=(n, d))
    y = rng.normal(scale=1e6, size=n)
    ds = Dataset(X, y)
    path = tmp_path_factory.mktemp("rt") / "ds.csv"
    save_csv(ds, path)
    back = load_csv(path, "y")
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.response, ds.response)


def test_query_csv(tmp_path):
    path = _write(tmp_path, "a,b\n1,2\n3,4\n")
    X = load_query_csv(path)
    assert X.tolist() == [[1.0, 2.0], [3.0, 4.0]]


class TestMakeFolds:
    def test_k_equals_n(self):
        plan = make_folds(10, 10, seed=3)
        sizes = np.bincount(plan.assignments, minlength=10)
        assert sizes.tolist() == [1] * 10

    def test_balance_10_3(self):
        plan = make_folds(10, 3, seed=3)
        sizes = sorted(np.bincount(plan.assignments, minlength=3).tolist())
        assert sizes == [3, 3, 4]

    def test_balance_308_10(self):
        # integer division: 308 = 10*30 + 8 -> eight folds of 31, two of 30
        plan = make_folds(308, 10, seed=1)
        sizes = sorted(np.bincount(plan.assignments, minlength=10).tolist())
        assert sizes == [30, 30] + [31] * 8

    def test_deterministic_and_pure(self):
        a = make_folds(57, 5, seed=11).assignments
        np.random.seed(0)  # global state must not matter
        b = make_folds(57, 5, seed=11).assignments
        assert np.array_equal(a, b)
        assert not np.array_equal(a, make_folds(57, 5, seed=12).assignments)

    def test_every_fold_used(self):
        plan = make_folds(12, 5, seed=0)
        assert set(plan.assignments.tolist()) == set(range(5))

    def test_train_test_partition(self):
        plan = make_folds(20, 4, seed=0)
        for f in range(4):
            tr, te = plan.train_indices(f), plan.test_indices(f)
            assert len(np.intersect1d(tr, te)) == 0
            assert len(tr) + len(te) == 20

    def test_errors(self):
        with pytest.raises(ValueError):
            make_folds(5, 6, seed=0)
        with pytest.raises(ValueError):
            make_folds(5, 0, seed=0)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 200), st.data())
def test_fold_sizes_differ_by_at_most_one(n, data):
    k = data.draw(st.integers(1, n))
    seed = data.draw(st.integers(0, 2 ** 30))
    sizes = np.bincount(make_folds(n, k, seed).assignments, minlength=k)
    assert sizes.max() - sizes.min() <= 1
    assert sizes.sum() == n
