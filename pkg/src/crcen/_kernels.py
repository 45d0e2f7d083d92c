"""Fused full-batch loss/gradient kernels compiled with numba.

One pass over the samples computes the weighted cross-entropy terms and
accumulates every parameter gradient without materialising the hidden
activations for the whole batch. Only the two architectures the
simulations use are covered: no hidden layer (logistic regression) and one
hidden layer. Deeper models go through the numpy path in :mod:`crcen.nn`.

Activation codes: 0 sigmoid, 1 tanh, 2 relu.
"""

import math

import numpy as np

from .accel import HAVE_NUMBA

if HAVE_NUMBA:
    from numba import njit
else:  # pragma: no cover

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


PROB_EPS = 1e-12


@njit(cache=True, inline="always")
def _prob(o):
    if o >= 0.0:
        p = 1.0 / (1.0 + math.exp(-o))
    else:
        e = math.exp(o)
        p = e / (1.0 + e)
    if p < PROB_EPS:
        p = PROB_EPS
    elif p > 1.0 - PROB_EPS:
        p = 1.0 - PROB_EPS
    return p


@njit(cache=True, inline="always")
def _act(z, code):
    if code == 0:
        # exp overflow gives inf and a clean 0.0, so no sign split is needed
        return 1.0 / (1.0 + math.exp(-z))
    if code == 1:
        return math.tanh(z)
    return z if z > 0.0 else 0.0


@njit(cache=True, inline="always")
def _act_deriv(a, code):
    # derivative expressed through the activation value
    if code == 0:
        return a * (1.0 - a)
    if code == 1:
        return 1.0 - a * a
    return 1.0 if a > 0.0 else 0.0


@njit(cache=True)
def logistic_loss_grad(X, y, w, b, lam, gw):
    """Returns ``(L1, L0, s1, s0)``; writes the weight gradient into ``gw``.

    ``s1 = sum_{y=1}(1-p)`` and ``s0 = sum_{y=0} p``, so the bias gradient
    is ``-lam*s1 + (1-lam)*s0``.
    """
    n, p = X.shape
    for j in range(p):
        gw[j] = 0.0
    l1 = 0.0
    l0 = 0.0
    s1 = 0.0
    s0 = 0.0
    for i in range(n):
        o = b
        for j in range(p):
            o += X[i, j] * w[j]
        pr = _prob(o)
        if y[i] == 1:
            d = -lam * (1.0 - pr)
            s1 += 1.0 - pr
            l1 -= math.log(pr)
        else:
            d = (1.0 - lam) * pr
            s0 += pr
            l0 -= math.log(1.0 - pr)
        for j in range(p):
            gw[j] += d * X[i, j]
    return l1, l0, s1, s0


@njit(cache=True)
def one_hidden_loss_grad(X, y, W1, b1, w2, b2, lam, code, gW1, gb1, gw2):
    """Same contract as :func:`logistic_loss_grad` for a p-h-1 network."""
    n = X.shape[0]
    h = W1.shape[1]
    gw2[:] = 0.0
    # hidden pre-activations in one BLAS call, then overwritten in place by
    # the activations and finally by the hidden-layer deltas
    A = X @ W1
    l1 = 0.0
    l0 = 0.0
    s1 = 0.0
    s0 = 0.0
    for i in range(n):
        o = b2
        for k in range(h):
            a = _act(A[i, k] + b1[k], code)
            A[i, k] = a
            o += a * w2[k]
        pr = _prob(o)
        if y[i] == 1:
            d = -lam * (1.0 - pr)
            s1 += 1.0 - pr
            l1 -= math.log(pr)
        else:
            d = (1.0 - lam) * pr
            s0 += pr
            l0 -= math.log(1.0 - pr)
        for k in range(h):
            a = A[i, k]
            gw2[k] += d * a
            A[i, k] = d * w2[k] * _act_deriv(a, code)
    gW1[:, :] = X.T @ A
    for k in range(h):
        acc = 0.0
        for i in range(n):
            acc += A[i, k]
        gb1[k] = acc
    return l1, l0, s1, s0
