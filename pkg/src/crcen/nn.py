"""Multilayer perceptron with a single sigmoid output unit.

Weights are stored as ``(fan_in, fan_out)`` arrays so a layer computes
``Z = A @ W + b``. The last layer always has one unit and its sigmoid
output is ``p(y=1 | x)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, ShapeError
from .linalg import RngStream, as_matrix

ACTIVATIONS = ("sigmoid", "tanh", "relu")
ACTIVATION_CODES = {name: i for i, name in enumerate(ACTIVATIONS)}

# probabilities are kept this far from 0 and 1 so every log is finite
PROB_EPS = 1e-12

MODEL_FORMAT = "crcen-mlp/1"


def _sigmoid_raw(x):
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(x):
    """Numerically stable logistic function, clipped to [eps, 1 - eps]."""
    out = np.clip(_sigmoid_raw(x), PROB_EPS, 1.0 - PROB_EPS)
    return out if out.ndim else float(out)


def sigmoid_deriv(x):
    s = _sigmoid_raw(x)
    out = s * (1.0 - s)
    return out if out.ndim else float(out)


def _activate(z, name):
    if name == "sigmoid":
        return _sigmoid_raw(z)
    if name == "tanh":
        return np.tanh(z)
    return np.maximum(z, 0.0)


def _activation_deriv(a, name):
    # in terms of the activation value, not the pre-activation
    if name == "sigmoid":
        return a * (1.0 - a)
    if name == "tanh":
        return 1.0 - a * a
    return (a > 0.0).astype(np.float64)


@dataclass
class MlpModel:
    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "sigmoid"

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        _check_sizes(self.layer_sizes)
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}; choose from {ACTIVATIONS}")
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ConfigError("need one weight matrix and one bias vector per layer")
        self.weights = [np.array(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.array(b, dtype=np.float64).reshape(-1) for b in self.biases]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            shape = (self.layer_sizes[i], self.layer_sizes[i + 1])
            if w.shape != shape:
                raise ShapeError(f"layer {i} weights have shape {w.shape}, expected {shape}")
            if b.shape != (shape[1],):
                raise ShapeError(f"layer {i} bias has shape {b.shape}, expected {(shape[1],)}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ConfigError(f"layer {i} has non-finite parameters")

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def hidden_sizes(self) -> tuple[int, ...]:
        return self.layer_sizes[1:-1]

    @property
    def output_bias(self) -> float:
        return float(self.biases[-1][0])

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "MlpModel":
        return MlpModel(
            self.layer_sizes,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.activation,
        )

    def with_params(self, weights, biases) -> "MlpModel":
        """Same architecture, new parameter arrays (shapes are trusted)."""
        out = object.__new__(MlpModel)
        out.layer_sizes, out.activation = self.layer_sizes, self.activation
        out.weights, out.biases = list(weights), list(biases)
        return out

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "layer_sizes": list(self.layer_sizes),
            "activation": self.activation,
            "weights": [w.reshape(-1).tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpModel":
        sizes = tuple(d["layer_sizes"])
        weights = [
            np.asarray(w, dtype=np.float64).reshape(sizes[i], sizes[i + 1])
            for i, w in enumerate(d["weights"])
        ]
        return cls(sizes, weights, [np.asarray(b, dtype=np.float64) for b in d["biases"]],
                   d.get("activation", "sigmoid"))


def _check_sizes(sizes):
    if len(sizes) < 2:
        raise ConfigError("layer_sizes needs at least an input and an output size")
    if any(s < 1 for s in sizes):
        raise ConfigError(f"layer sizes must be positive, got {sizes}")
    if sizes[-1] != 1:
        raise ConfigError(f"output layer must have exactly one unit, got {sizes[-1]}")


def init_model(layer_sizes, activation: str = "sigmoid", rng: RngStream | int | None = None) -> MlpModel:
    """Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.

    ``layer_sizes=(p, 1)`` gives logistic regression.
    """
    sizes = tuple(int(s) for s in layer_sizes)
    _check_sizes(sizes)
    if rng is None or isinstance(rng, int):
        rng = RngStream(rng or 0)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(sizes, weights, biases, activation)


@dataclass
class ForwardTrace:
    """Intermediates of one forward pass.

    ``activations[0]`` is the input batch and ``activations[-1]`` the last
    hidden layer (``h_x``); ``o`` is the output pre-activation.
    """

    activations: list[np.ndarray]
    pre_activations: list[np.ndarray] = field(repr=False)
    o: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)


def forward(model: MlpModel, X) -> ForwardTrace:
    X = as_matrix(X, "X")
    if X.shape[1] != model.input_dim:
        raise ShapeError(f"X has {X.shape[1]} columns, model expects {model.input_dim}")
    acts = [X]
    pres = []
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        z = acts[-1] @ w + b
        pres.append(z)
        acts.append(_activate(z, model.activation))
    o = (acts[-1] @ model.weights[-1])[:, 0] + model.biases[-1][0]
    return ForwardTrace(acts, pres, o, sigmoid(o))


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def output_bias(self) -> float:
        return float(self.biases[-1][0])

    def flat(self) -> np.ndarray:
        return np.concatenate([a.reshape(-1) for pair in zip(self.weights, self.biases) for a in pair])

    def norm(self) -> float:
        return float(np.linalg.norm(self.flat()))


def check_labels(labels, n: int | None = None) -> np.ndarray:
    y = np.asarray(labels)
    if y.ndim != 1:
        raise DataError("labels must be a 1-D vector")
    if n is not None and y.shape[0] != n:
        raise ShapeError(f"{y.shape[0]} labels for {n} samples")
    if y.size and not np.all((y == 0) | (y == 1)):
        raise DataError("labels must be 0 or 1")
    return y.astype(np.int64)


def output_delta(p, y, lam):
    """dL/do per sample: ``-lam*(1-p)`` for y=1 and ``(1-lam)*p`` for y=0."""
    return np.where(y == 1, -lam * (1.0 - p), (1.0 - lam) * p)


def output_bias_gradient(p, y, lam) -> float:
    """``-lam * sum_{y=1}(1-p) + (1-lam) * sum_{y=0} p``.

    :func:`backward` uses exactly this expression for the output bias.
    """
    return float(-lam * np.sum(1.0 - p[y == 1]) + (1.0 - lam) * np.sum(p[y == 0]))


def backward(model: MlpModel, trace: ForwardTrace, labels, lam: float, beta: float = 0.0) -> Gradients:
    """Exact gradient of ``lam*L1 + (1-lam)*L0 + beta*||W||^2``.

    The penalty term touches weights only, never biases.
    """
    y = check_labels(labels, trace.p.shape[0])
    delta = output_delta(trace.p, y, lam)[:, None]
    n_layers = len(model.weights)
    gw = [None] * n_layers
    gb = [None] * n_layers
    for layer in range(n_layers - 1, -1, -1):
        a_in = trace.activations[layer]
        gw[layer] = a_in.T @ delta
        gb[layer] = delta.sum(axis=0)
        if beta:
            gw[layer] = gw[layer] + 2.0 * beta * model.weights[layer]
        if layer:
            delta = (delta @ model.weights[layer].T) * _activation_deriv(a_in, model.activation)
    gb[-1] = np.array([output_bias_gradient(trace.p, y, lam)])
    return Gradients(gw, gb)


def save_model(model: MlpModel, path, metadata: dict | None = None) -> None:
    d = model.to_dict()
    if metadata:
        d["metadata"] = metadata
    Path(path).write_text(json.dumps(d, indent=2, sort_keys=True) + "\n")


def load_model(path) -> tuple[MlpModel, dict]:
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read model file {path}: {exc}") from exc
    if d.get("format") != MODEL_FORMAT:
        raise DataError(f"{path} is not a {MODEL_FORMAT} model file")
    return MlpModel.from_dict(d), d.get("metadata", {})
