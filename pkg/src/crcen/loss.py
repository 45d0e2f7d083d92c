"""Class-wise reweighted cross entropy and its L2 penalty."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DataError, NumericError, ParameterError
from .nn import PROB_EPS, MlpModel, check_labels


def check_lambda(lam: float) -> float:
    lam = float(lam)
    if not 0.0 < lam < 1.0:
        raise ParameterError(f"lambda must lie in the open interval (0, 1), got {lam}")
    return lam


@dataclass(frozen=True)
class LossValue:
    """``total = lam*minority + (1-lam)*majority``; ``penalty`` is not included."""

    total: float
    minority: float
    majority: float
    lam: float
    penalty: float = 0.0

    @property
    def objective(self) -> float:
        return self.total + self.penalty

    def to_dict(self) -> dict:
        d = asdict(self)
        d["objective"] = self.objective
        return d


def crcen_loss(probs, labels, lam: float) -> LossValue:
    """Summed (not averaged) weighted log loss.

    ``minority = -sum_{y=1} log p`` and ``majority = -sum_{y=0} log(1-p)``.
    """
    lam = check_lambda(lam)
    p = np.asarray(probs, dtype=np.float64)
    y = check_labels(labels)
    if p.ndim != 1 or p.shape != y.shape:
        raise DataError("probs and labels must be 1-D vectors of equal length")
    if p.size == 0:
        raise DataError("crcen_loss needs at least one sample")
    p = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    if not np.all(np.isfinite(p)):
        raise NumericError("probabilities are not finite")
    l1 = float(-np.sum(np.log(p[y == 1])))
    l0 = float(-np.sum(np.log1p(-p[y == 0])))
    return LossValue(lam * l1 + (1.0 - lam) * l0, l1, l0, lam)


def l2_penalty(model: MlpModel, beta: float) -> float:
    """``beta * sum(W**2)`` over every weight matrix; biases are exempt."""
    if beta < 0:
        raise ParameterError(f"beta must be non-negative, got {beta}")
    if beta == 0:
        return 0.0
    return float(beta * sum(np.sum(w * w) for w in model.weights))


def lambda_from_alpha(alpha: float, n0: int, n1: int) -> float:
    """``alpha*N0 / (alpha*N0 + N1)``; ``alpha=1`` is inverse class frequency."""
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    if n0 < 1 or n1 < 1:
        raise ParameterError("both class counts must be at least 1")
    return alpha * n0 / (alpha * n0 + n1)
