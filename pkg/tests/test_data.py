import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crcen.data import (
    Dataset,
    GridCandidate,
    _select,
    kfold_grid_search,
    load_csv,
    make_grid,
    save_csv,
    standardize,
    stratified_kfold,
    stratified_split,
)
from crcen.errors import ConfigError, DataError, ParameterError
from crcen.linalg import RngStream
from crcen.simulation import sample_sim2
from crcen.trainer import TrainConfig


def imbalanced(n1, n0, p=2, seed=0):
    r = RngStream(seed)
    return Dataset(r.normal(0, 1, (n1 + n0, p)), np.r_[np.ones(n1, int), np.zeros(n0, int)])


def test_balanced_file_warns(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("1.0,2.0,1\n3.0,4.0,1\n5.0,6.0,0\n7.0,8.0,0\n")
    with pytest.warns(UserWarning, match="as large as"):
        d = load_csv(f)
    assert (d.n0, d.n1, d.p) == (2, 2, 2)


def test_minority_majority_warning():
    with pytest.warns(UserWarning, match="minority"):
        Dataset(np.zeros((3, 1)), [1, 1, 0])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        Dataset(np.zeros((3, 1)), [1, 0, 0])


def test_csv_round_trip(tmp_path):
    d = imbalanced(5, 20, p=3, seed=1)
    f = tmp_path / "d.csv"
    save_csv(d, f)
    back = load_csv(f, label_column="label")
    np.testing.assert_array_equal(back.X, d.X)
    np.testing.assert_array_equal(back.y, d.y)
    assert back.feature_names == ["x0", "x1", "x2"]


def test_csv_label_column_by_index_and_mapping(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("cls,a\nneg,1\nneg,2\npos,3\nneg,4\n")
    d = load_csv(f, label_column=0, map_labels=True)
    np.testing.assert_array_equal(d.y, [0, 0, 1, 0])
    np.testing.assert_array_equal(d.X[:, 0], [1, 2, 3, 4])


@pytest.mark.parametrize("text,match", [
    ("1,0\nx,1\n2,0\n", r"\.csv:2: non-numeric"),
    ("1,0\n2,0\n", "single class"),
    ("1,0\n2,3\n", "0 or 1"),
])
def test_csv_errors(tmp_path, text, match):
    f = tmp_path / "bad.csv"
    f.write_text(text)
    with pytest.raises(DataError, match=match):
        load_csv(f, header=False)


def test_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_csv(tmp_path / "nope.csv")


def test_abalone_shaped_imbalance_ratio():
    d = imbalanced(391, 3786, p=10)
    assert d.n == 4177 and d.p == 10
    assert round(d.imbalance_ratio, 1) == 9.7


def test_standardize_without_leakage():
    r = RngStream(2)
    X = np.c_[r.normal(5, 3, 100), np.full(100, 7.0)]
    train = Dataset(X, np.r_[np.ones(10, int), np.zeros(90, int)])
    test = Dataset(X + 4.0, train.y)
    tr, (te,), s = standardize(train, [test])
    np.testing.assert_allclose(tr.X.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(tr.X[:, 0].std(), 1.0, rtol=1e-12)
    assert np.all(tr.X[:, 1] == 0.0) and s.scale[1] == 1.0
    assert np.all(np.abs(te.X.mean(axis=0)) > 0.5)
    np.testing.assert_array_equal(s.apply(train).X, tr.X)


def test_split_arithmetic_and_partition():
    d = imbalanced(100, 1000)
    sp = stratified_split(d, 0.75, seed=3)
    assert (sp.train.n1, sp.train.n0, sp.test.n1, sp.test.n0) == (75, 750, 25, 250)
    assert np.intersect1d(sp.train_idx, sp.test_idx).size == 0
    np.testing.assert_array_equal(np.union1d(sp.train_idx, sp.test_idx), np.arange(d.n))
    again = stratified_split(d, 0.75, seed=3)
    np.testing.assert_array_equal(sp.train_idx, again.train_idx)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 60), st.integers(2, 300), st.floats(0.05, 0.95))
def test_split_preserves_class_proportions(n1, n0, ratio):
    d = Dataset(np.zeros((n1 + n0, 1)), np.r_[np.ones(n1, int), np.zeros(n0, int)], warn_balance=False)
    sp = stratified_split(d, ratio, seed=0)
    for cls, count in ((1, n1), (0, n0)):
        got = int(np.count_nonzero(sp.train.y == cls))
        assert abs(got - count * ratio) <= 1.0
        assert 1 <= got <= count - 1


def test_split_rejects_tiny_class_and_bad_ratio():
    with pytest.raises(DataError):
        stratified_split(imbalanced(1, 10), 0.75)
    with pytest.raises(ParameterError):
        stratified_split(imbalanced(5, 10), 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 30), st.integers(4, 120), st.integers(2, 4), st.integers(0, 100))
def test_kfold_partitions(n1, n0, k, seed):
    y = np.r_[np.ones(n1, int), np.zeros(n0, int)]
    folds = stratified_kfold(y, k, seed)
    allv = np.concatenate(folds)
    assert allv.size == y.size
    np.testing.assert_array_equal(np.sort(allv), np.arange(y.size))
    ones = [int(y[f].sum()) for f in folds]
    assert max(ones) - min(ones) <= 1


def test_select_tie_break():
    c = make_grid([(10,), (5,)], [0.1, 0.0])
    assert c[_select(c, [0.5, 0.5, 0.5, 0.5])] == GridCandidate((5,), 0.0)
    assert _select(c, [0.9, 0.5, 0.5, 0.5]) == 0
    dup = [GridCandidate((5,), 0.0)] * 3
    assert _select(dup, [0.2, 0.2, 0.2]) == 0


def test_single_candidate_grid():
    d = imbalanced(20, 80, seed=4)
    res = kfold_grid_search(d, 2, [GridCandidate((3,), 0.0)], TrainConfig(max_epochs=5), seed=1)
    assert res.selected_index == 0 and len(res.fold_scores[0]) == 2


def test_grid_errors():
    d = imbalanced(3, 80)
    with pytest.raises(ConfigError):
        kfold_grid_search(d, 2, [], TrainConfig())
    with pytest.raises(DataError):
        kfold_grid_search(d, 4, [GridCandidate((3,), 0.0)], TrainConfig())


def test_heavy_penalty_loses_the_grid_search():
    """On Sim2-like data a crushing beta collapses the net and scores worse."""
    d = sample_sim2(RngStream(2), 150, 1500)
    cfg = TrainConfig(lam=1500 / 1650, learning_rate=4.0, max_epochs=200, grad_tol=1e-4)
    res = kfold_grid_search(d, 3, make_grid([(10,)], [0.0, 1e4]), cfg, seed=0)
    assert res.selected.beta == 0.0
    assert res.scores[0] > res.scores[1]
