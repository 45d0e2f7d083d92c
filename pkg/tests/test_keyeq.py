import numpy as np
import pytest

from crcen.errors import DataError, DegenerateProbabilitiesError, ParameterError
from crcen.keyeq import (
    class_prob_stats,
    key_eq_generalized,
    key_eq_training,
    rhs_generalized,
    rhs_training,
    training_residual_bound,
)
from crcen.nn import output_bias_gradient


def test_training_lhs_hand_example():
    r = key_eq_training([0.9, 0.7, 0.1, 0.2], [1, 1, 0, 0], 0.5)
    assert r.lhs == pytest.approx(0.4 / 0.3, rel=1e-14)
    assert r.rhs == 1.0
    assert r.mode == "training_exact"
    assert (r.n1, r.n0) == (2, 2)


def test_rhs_values():
    assert rhs_training(0.5) == 1.0
    assert rhs_training(10 / 11) == pytest.approx(0.1, rel=1e-14)
    assert rhs_generalized(0.5, 10000, 1000) == pytest.approx(10.0)
    assert rhs_generalized(10 / 11, 10000, 1000) == pytest.approx(1.0, rel=1e-14)
    assert rhs_generalized(20 / 21, 10000, 1000) == pytest.approx(0.5, rel=1e-14)
    with pytest.raises(ParameterError):
        rhs_training(1.0)


def test_generalized_on_known_means():
    p = np.r_[np.full(10, 0.6), np.full(20, 0.4)]
    y = np.r_[np.ones(10, int), np.zeros(20, int)]
    r = key_eq_generalized(p, y, 10 / 11, 10000, 1000)
    assert r.lhs == pytest.approx(0.4 / 0.4)
    assert r.relative_residual == pytest.approx(0.0, abs=1e-12)
    assert r.mode == "generalized"


def test_residual_matches_bias_gradient(rng):
    p = rng.uniform(0.01, 0.99, 200)
    y = (rng.random(200) < 0.3).astype(int)
    lam = 0.7
    r = key_eq_training(p, y, lam)
    g = output_bias_gradient(p, y, lam)
    s0 = p[y == 0].sum()
    assert r.relative_residual == pytest.approx(abs(g) / ((1 - lam) * s0), rel=1e-10)
    tol = abs(g) / len(p)
    assert r.relative_residual <= training_residual_bound(p, y, lam, tol) * (1 + 1e-12)


def test_stats_with_single_sample_class():
    st = class_prob_stats([0.3, 0.2, 0.4], [1, 0, 0])
    assert st.var1 is None
    assert st.var0 == pytest.approx(np.var([0.2, 0.4], ddof=1))
    assert st.mean1 == 0.3


def test_missing_class_and_degenerate():
    with pytest.raises(DataError):
        key_eq_training([0.1, 0.2], [0, 0], 0.5)
    with pytest.raises(DegenerateProbabilitiesError):
        key_eq_training([0.5, 0.0], [1, 0], 0.5)
    with pytest.raises(DegenerateProbabilitiesError):
        key_eq_generalized([0.5, 0.0], [1, 0], 0.5, 10, 1)


def test_stats_hand_examples():
    st = class_prob_stats([0.5] * 4, [1, 1, 0, 0])
    assert (st.mean1, st.mean0, st.var1, st.var0) == (0.5, 0.5, 0.0, 0.0)
    st = class_prob_stats([0.6, 0.8, 0.1, 0.3], [1, 1, 0, 0])
    assert st.mean1 == pytest.approx(0.7, rel=1e-15)
    assert st.var1 == pytest.approx(0.02, rel=1e-12)


def test_stats_match_direct_summation(rng):
    for _ in range(20):
        n = int(rng.integers(4, 200))
        p = rng.random(n)
        y = np.r_[1, 0, (rng.random(n - 2) < 0.3).astype(int)]
        st = class_prob_stats(p, y)
        for cls, mean, var in ((1, st.mean1, st.var1), (0, st.mean0, st.var0)):
            vals = list(p[y == cls])
            m = sum(vals) / len(vals)
            assert mean == pytest.approx(m, rel=1e-13)
            if len(vals) > 1:
                assert var == pytest.approx(sum((v - m) ** 2 for v in vals) / (len(vals) - 1), rel=1e-10, abs=1e-15)
            assert 0.0 <= mean <= 1.0


def test_generalized_lhs_is_permutation_invariant(rng):
    p = rng.random(300)
    y = (rng.random(300) < 0.5).astype(int)
    perm = rng.permutation(300)
    a = key_eq_generalized(p, y, 0.9, 1000, 100).lhs
    b = key_eq_generalized(p[perm], y[perm], 0.9, 1000, 100).lhs
    assert a == b
