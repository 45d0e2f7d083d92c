import numpy as np
import pytest

from crcen import accel
from crcen.linalg import RngStream
from crcen.nn import ACTIVATIONS, init_model
from crcen.trainer import loss_and_gradient


def both_paths(model, X, y, lam, beta):
    accel.enable_jit()
    try:
        lj, gj = loss_and_gradient(model, X, y, lam, beta)
    finally:
        accel.disable_jit()
    ln, gn = loss_and_gradient(model, X, y, lam, beta)
    accel.reset_jit()
    return (lj, gj), (ln, gn)


@pytest.mark.parametrize("sizes", [(1, 1), (3, 1), (3, 10, 1), (5, 4, 1)])
@pytest.mark.parametrize("activation", ACTIVATIONS)
def test_jit_matches_numpy(sizes, activation, rng):
    model = init_model(sizes, activation, RngStream(3))
    model.biases[-1][0] = 0.2
    X = rng.normal(size=(200, sizes[0]))
    y = (rng.random(200) < 0.2).astype(int)
    (lj, gj), (ln, gn) = both_paths(model, X, y, 0.8, 0.05)
    assert lj.total == pytest.approx(ln.total, rel=1e-12)
    assert lj.penalty == ln.penalty
    np.testing.assert_allclose(gj.flat(), gn.flat(), rtol=1e-10, atol=1e-12)


def test_deep_models_fall_back_to_numpy(rng):
    model = init_model((3, 4, 4, 1), rng=RngStream(1))
    X = rng.normal(size=(20, 3))
    y = np.r_[np.ones(5, int), np.zeros(15, int)]
    (lj, gj), (ln, gn) = both_paths(model, X, y, 0.6, 0.0)
    assert lj.total == ln.total
    np.testing.assert_array_equal(gj.flat(), gn.flat())


def test_env_flag(monkeypatch):
    accel.reset_jit()
    monkeypatch.setenv(accel.ENV_FLAG, "1")
    assert not accel.jit_enabled()
    monkeypatch.setenv(accel.ENV_FLAG, "0")
    assert accel.jit_enabled() == accel.HAVE_NUMBA
    monkeypatch.delenv(accel.ENV_FLAG)
    assert accel.jit_enabled() == accel.HAVE_NUMBA
    accel.disable_jit()
    assert not accel.jit_enabled()
    accel.reset_jit()
