"""Gradient-descent training of an :class:`~crcen.nn.MlpModel`.

Full-batch mode takes plain gradient steps on ``(L + beta*Omega) / N``.
A step that raises the objective is retried with half the learning rate
(at most ``max_halvings`` times), which keeps the per-epoch objective
non-increasing. Training stops once both the output-bias gradient and the
whole gradient, normalised by ``N``, fall under their tolerances.

Afterwards the output bias is, by default, set to the exact minimiser of
the objective along that single coordinate. The data loss is convex in the
output bias and the penalty does not involve it, so this only lowers the
objective, and it makes the output-bias gradient vanish to rounding error.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .accel import jit_enabled
from .errors import ConfigError, DataError, NumericError, ParameterError
from .linalg import RngStream
from .loss import LossValue, check_lambda, crcen_loss, l2_penalty
from .nn import (
    ACTIVATION_CODES,
    Gradients,
    MlpModel,
    _sigmoid_raw,
    backward,
    check_labels,
    forward,
)


@dataclass
class TrainConfig:
    lam: float = 0.5
    learning_rate: float = 0.5
    max_epochs: int = 20000
    beta: float = 0.0
    batch_size: int | None = None  # None means full batch
    convergence_tol: float = 1e-6  # on |dJ/d(output bias)| / N
    grad_tol: float = 1e-6  # on ||dJ/dtheta|| / N
    seed: int = 0
    threshold: float = 0.5
    backoff: bool = True
    max_halvings: int = 30
    solve_output_bias: bool = True

    def __post_init__(self):
        check_lambda(self.lam)
        if self.learning_rate < 0 or not math.isfinite(self.learning_rate):
            raise ConfigError("learning_rate must be a finite non-negative number")
        if self.max_epochs < 0:
            raise ConfigError("max_epochs must be >= 0")
        if self.beta < 0:
            raise ConfigError("beta must be >= 0")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError("batch_size must be positive")
        if not (self.convergence_tol > 0 and self.grad_tol > 0):
            raise ConfigError("tolerances must be positive")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError("threshold must lie in (0, 1)")

    @property
    def full_batch(self) -> bool:
        return self.batch_size is None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class TrainReport:
    loss: LossValue
    epochs: int
    converged: bool
    output_bias_grad: float  # signed, normalised by N
    grad_norm: float  # normalised by N
    final_learning_rate: float
    stalled: bool = False
    history: list[float] = field(default_factory=list, repr=False)
    wall_time: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        # wall time and history are left out so reports stay byte-reproducible
        return {
            "loss": self.loss.to_dict(),
            "epochs": self.epochs,
            "converged": self.converged,
            "output_bias_grad": self.output_bias_grad,
            "grad_norm": self.grad_norm,
            "final_learning_rate": self.final_learning_rate,
            "stalled": self.stalled,
        }


def _kernel_arrays(X, y):
    return np.ascontiguousarray(X, dtype=np.float64), np.ascontiguousarray(y, dtype=np.int64)


def loss_and_gradient(model: MlpModel, X, y, lam: float, beta: float = 0.0) -> tuple[LossValue, Gradients]:
    """Summed loss and exact gradient of ``lam*L1 + (1-lam)*L0 + beta*Omega``.

    Uses the fused numba kernel for models with at most one hidden layer
    when JIT is enabled, otherwise :func:`crcen.nn.forward` /
    :func:`crcen.nn.backward`.
    """
    penalty = l2_penalty(model, beta)
    depth = len(model.weights)
    if jit_enabled() and depth <= 2:
        Xc, yc = _kernel_arrays(X, y)
        if Xc.shape[1] != model.input_dim:
            raise DataError(f"X has {Xc.shape[1]} columns, model expects {model.input_dim}")
        if depth == 1:
            gw = np.empty(model.input_dim)
            w = np.ascontiguousarray(model.weights[0][:, 0])
            l1, l0, s1, s0 = _kernels.logistic_loss_grad(Xc, yc, w, model.biases[0][0], lam, gw)
            gws = [gw[:, None]]
            gbs = []
        else:
            W1, b1 = model.weights[0], model.biases[0]
            w2 = np.ascontiguousarray(model.weights[1][:, 0])
            gW1, gb1, gw2 = np.empty_like(W1), np.empty_like(b1), np.empty_like(w2)
            l1, l0, s1, s0 = _kernels.one_hidden_loss_grad(
                Xc, yc, np.ascontiguousarray(W1), b1, w2, model.biases[1][0], lam,
                ACTIVATION_CODES[model.activation], gW1, gb1, gw2,
            )
            gws = [gW1, gw2[:, None]]
            gbs = [gb1]
        if beta:
            gws = [g + 2.0 * beta * w for g, w in zip(gws, model.weights)]
        gbs.append(np.array([-lam * s1 + (1.0 - lam) * s0]))
        lv = LossValue(lam * l1 + (1.0 - lam) * l0, l1, l0, lam, penalty)
        return lv, Gradients(gws, gbs)
    trace = forward(model, X)
    base = crcen_loss(trace.p, y, lam)
    lv = LossValue(base.total, base.minority, base.majority, lam, penalty)
    return lv, backward(model, trace, y, lam, beta)


def _assign(model: MlpModel, weights, biases) -> None:
    for dst, src in zip(model.weights, weights):
        dst[...] = src
    for dst, src in zip(model.biases, biases):
        dst[...] = src


def _stepped(model: MlpModel, grads: Gradients, scale: float):
    return (
        [w - scale * g for w, g in zip(model.weights, grads.weights)],
        [b - scale * g for b, g in zip(model.biases, grads.biases)],
    )


def solve_output_bias(model: MlpModel, X, y, lam: float, max_iter: int = 200) -> float:
    """Shift the output bias to the root of its gradient; returns the shift.

    The gradient ``-lam*sum_{y=1}(1-s(o+d)) + (1-lam)*sum_{y=0} s(o+d)`` is
    strictly increasing in ``d``. A safeguarded Newton iteration on a
    bracket finds the root.
    """
    y = np.asarray(y)
    o = forward(model, X).o
    o1, o0 = o[y == 1], o[y == 0]
    if not (o1.size and o0.size):
        raise DataError("both classes are needed to solve for the output bias")

    def grad_hess(d):
        p1 = _sigmoid_raw(o1 + d)
        p0 = _sigmoid_raw(o0 + d)
        g = -lam * np.sum(1.0 - p1) + (1.0 - lam) * np.sum(p0)
        h = lam * np.sum(p1 * (1.0 - p1)) + (1.0 - lam) * np.sum(p0 * (1.0 - p0))
        return g, h

    lo, hi = -1.0, 1.0
    while grad_hess(lo)[0] > 0:
        lo *= 2.0
    while grad_hess(hi)[0] < 0:
        hi *= 2.0
    d = 0.0 if lo < 0.0 < hi else 0.5 * (lo + hi)
    for _ in range(max_iter):
        g, h = grad_hess(d)
        if g == 0.0:
            break
        if g > 0:
            hi = d
        else:
            lo = d
        nd = d - g / h if h > 0 else 0.5 * (lo + hi)
        if not lo < nd < hi:
            nd = 0.5 * (lo + hi)
        done = abs(nd - d) <= 4 * np.finfo(float).eps * max(1.0, abs(d))
        d = nd
        if done:
            break
    model.biases[-1][0] += d
    return d


def _check_data(model: MlpModel, data):
    X = np.asarray(data.X, dtype=np.float64)
    y = check_labels(data.y, X.shape[0] if X.ndim == 2 else None)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("training data must be a non-empty 2-D feature matrix")
    if X.shape[1] != model.input_dim:
        raise DataError(f"data has {X.shape[1]} features, model expects {model.input_dim}")
    if y.min() == y.max():
        raise DataError("training data contains a single class")
    return X, y


def train(model: MlpModel, data, cfg: TrainConfig) -> TrainReport:
    """Optimise ``model`` in place on ``data`` (anything with ``X`` and ``y``)."""
    X, y = _check_data(model, data)
    n = X.shape[0]
    start = time.perf_counter()
    lam, beta = cfg.lam, cfg.beta

    lv, g = loss_and_gradient(model, X, y, lam, beta)
    history = [lv.objective]
    lr = cfg.learning_rate
    epochs = 0
    stalled = False

    def finish(lv, g, converged_ok=True):
        bias_g = g.output_bias / n
        return TrainReport(
            loss=lv,
            epochs=epochs,
            converged=converged_ok and abs(bias_g) <= cfg.convergence_tol,
            output_bias_grad=bias_g,
            grad_norm=g.norm() / n,
            final_learning_rate=lr,
            stalled=stalled,
            history=history,
            wall_time=time.perf_counter() - start,
        )

    if lr == 0.0:
        return finish(lv, g, converged_ok=False)

    if cfg.full_batch:
        for _ in range(cfg.max_epochs):
            if abs(g.output_bias) / n <= cfg.convergence_tol and g.norm() / n <= cfg.grad_tol:
                break
            for _attempt in range(cfg.max_halvings + 1):
                weights, biases = _stepped(model, g, lr / n)
                trial = model.with_params(weights, biases)
                lv_t, g_t = loss_and_gradient(trial, X, y, lam, beta)
                ok = math.isfinite(lv_t.objective)
                if ok and (not cfg.backoff or lv_t.objective <= lv.objective):
                    break
                if not cfg.backoff:
                    raise NumericError(f"objective became non-finite at epoch {epochs} (lr={lr:g})")
                lr *= 0.5
            else:
                if not ok:
                    raise NumericError(
                        f"objective stayed non-finite after {cfg.max_halvings} learning-rate halvings "
                        f"at epoch {epochs} (last lr={lr:g})"
                    )
                stalled = True
                break
            _assign(model, weights, biases)
            lv, g = lv_t, g_t
            epochs += 1
            history.append(lv.objective)
    else:
        rng = RngStream(cfg.seed)
        bs = min(cfg.batch_size, n)
        for _ in range(cfg.max_epochs):
            order = rng.permutation(n)
            for s in range(0, n, bs):
                idx = order[s:s + bs]
                _, gb = loss_and_gradient(model, X[idx], y[idx], lam, beta * idx.size / n)
                weights, biases = _stepped(model, gb, lr / idx.size)
                _assign(model, weights, biases)
            epochs += 1
            lv, g = loss_and_gradient(model, X, y, lam, beta)
            if not math.isfinite(lv.objective):
                raise NumericError(f"objective became non-finite at epoch {epochs} (lr={lr:g})")
            history.append(lv.objective)
            if abs(g.output_bias) / n <= cfg.convergence_tol and g.norm() / n <= cfg.grad_tol:
                break

    if not all(np.all(np.isfinite(w)) for w in model.weights + model.biases):
        raise NumericError("parameters became non-finite during training")
    if cfg.solve_output_bias:
        solve_output_bias(model, X, y, lam)
        lv, g = loss_and_gradient(model, X, y, lam, beta)
    return finish(lv, g)


def predict_proba(model: MlpModel, X) -> np.ndarray:
    return forward(model, X).p


def classify(probs, threshold: float = 0.5):
    """Label 1 where ``p > threshold`` (strict)."""
    if not 0.0 < threshold < 1.0:
        raise ParameterError("threshold must lie in (0, 1)")
    p = np.asarray(probs)
    out = (p > threshold).astype(np.int64)
    return out if out.ndim else int(out)
