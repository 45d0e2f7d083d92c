"""Checks of the weight/probability relation satisfied by a trained CRCEN model.

At any point where the output-bias gradient vanishes, the training data obey

    sum_{y=1} (1 - p_i) / sum_{y=0} p_j = (1 - lam) / lam

exactly. :func:`key_eq_training` measures that identity.
:func:`key_eq_generalized` measures its population version on held-out data,

    (1 - mean_{y=1} p) / mean_{y=0} p  ~=  N0 (1 - lam) / (N1 lam),

where the class counts ``N0, N1`` come from the training set.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DataError, DegenerateProbabilitiesError
from .loss import check_lambda
from .nn import check_labels

TRAINING_EXACT = "training_exact"
GENERALIZED = "generalized"


@dataclass(frozen=True)
class KeyEquationReport:
    lhs: float
    rhs: float
    lam: float
    n0: int
    n1: int
    relative_residual: float
    mode: str

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ClassProbabilityStats:
    mean1: float
    mean0: float
    var1: float | None  # None when the class has fewer than two samples
    var0: float | None
    n1: int
    n0: int

    def to_dict(self) -> dict:
        return asdict(self)


def _split(probs, labels):
    p = np.asarray(probs, dtype=np.float64)
    y = check_labels(labels)
    if p.shape != y.shape:
        raise DataError("probs and labels must have equal length")
    p1, p0 = p[y == 1], p[y == 0]
    if p1.size == 0 or p0.size == 0:
        raise DataError("both classes must be present")
    return p1, p0


def _var(x: np.ndarray) -> float | None:
    if x.size < 2:
        return None
    m = math.fsum(x) / x.size
    return math.fsum((x - m) ** 2) / (x.size - 1)


def class_prob_stats(probs, labels) -> ClassProbabilityStats:
    """Per-class mean and unbiased variance of the predicted probability."""
    p1, p0 = _split(probs, labels)
    return ClassProbabilityStats(
        math.fsum(p1) / p1.size, math.fsum(p0) / p0.size, _var(p1), _var(p0), p1.size, p0.size
    )


def rhs_training(lam: float) -> float:
    lam = check_lambda(lam)
    return (1.0 - lam) / lam


def rhs_generalized(lam: float, n0: int, n1: int) -> float:
    lam = check_lambda(lam)
    if n0 < 1 or n1 < 1:
        raise DataError("training class counts must be positive")
    return n0 * (1.0 - lam) / (n1 * lam)


def key_eq_training(probs, labels, lam: float) -> KeyEquationReport:
    p1, p0 = _split(probs, labels)
    den = math.fsum(p0)
    if den == 0.0:
        raise DegenerateProbabilitiesError("majority-class probabilities sum to zero")
    lhs = math.fsum(1.0 - p1) / den
    rhs = rhs_training(lam)
    return KeyEquationReport(lhs, rhs, float(lam), p0.size, p1.size, abs(lhs - rhs) / rhs, TRAINING_EXACT)


def key_eq_generalized(probs_test, labels_test, lam: float, n0_train: int, n1_train: int) -> KeyEquationReport:
    stats = class_prob_stats(probs_test, labels_test)
    if stats.mean0 == 0.0:
        raise DegenerateProbabilitiesError("mean majority-class probability is zero")
    lhs = (1.0 - stats.mean1) / stats.mean0
    rhs = rhs_generalized(lam, n0_train, n1_train)
    return KeyEquationReport(
        lhs, rhs, float(lam), int(n0_train), int(n1_train), abs(lhs - rhs) / rhs, GENERALIZED
    )


def training_residual_bound(probs, labels, lam: float, bias_grad_tol: float) -> float:
    """Largest training residual compatible with ``|dL/db| / N <= bias_grad_tol``.

    With ``S1 = sum_{y=1}(1-p)``, ``S0 = sum_{y=0} p`` and output-bias
    gradient ``g = -lam*S1 + (1-lam)*S0``, the relative residual equals
    ``|g| / ((1-lam)*S0)``, hence is at most ``tol*N / ((1-lam)*S0)``.
    """
    lam = check_lambda(lam)
    p1, p0 = _split(probs, labels)
    s0 = math.fsum(p0)
    if s0 == 0.0:
        raise DegenerateProbabilitiesError("majority-class probabilities sum to zero")
    return bias_grad_tol * (p1.size + p0.size) / ((1.0 - lam) * s0)
