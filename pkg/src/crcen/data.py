"""Datasets, CSV ingestion, preprocessing and the split / grid-search protocol."""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError, ParameterError
from .linalg import RngStream


@dataclass
class Dataset:
    """Feature matrix ``X`` (N x p) with labels ``y`` in {0, 1}; 1 is the minority."""

    X: np.ndarray
    y: np.ndarray
    feature_names: list[str] | None = None
    warn_balance: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim == 1:
            self.X = self.X[:, None]
        y = np.asarray(self.y)
        if self.X.ndim != 2 or y.ndim != 1 or y.shape[0] != self.X.shape[0]:
            raise DataError(f"X {self.X.shape} and y {y.shape} do not describe the same samples")
        if y.size and not np.all((y == 0) | (y == 1)):
            raise DataError("labels must be 0 or 1")
        self.y = y.astype(np.int64)
        if self.feature_names is not None and len(self.feature_names) != self.X.shape[1]:
            raise DataError("feature_names length does not match the number of columns")
        if self.warn_balance and self.n and self.n1 >= self.n0:
            what = "outnumbers" if self.n1 > self.n0 else "is as large as"
            warnings.warn(
                f"class 1 ({self.n1} samples) {what} class 0 ({self.n0}); "
                "class 1 is expected to be the minority",
                stacklevel=2,
            )

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    @property
    def p(self) -> int:
        return int(self.X.shape[1])

    @property
    def n1(self) -> int:
        return int(np.count_nonzero(self.y == 1))

    @property
    def n0(self) -> int:
        return self.n - self.n1

    @property
    def imbalance_ratio(self) -> float:
        return self.n0 / self.n1 if self.n1 else math.inf

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], self.feature_names, warn_balance=False)

    def summary(self) -> dict:
        return {"n": self.n, "p": self.p, "n0": self.n0, "n1": self.n1, "imbalance_ratio": self.imbalance_ratio}


# --- CSV -------------------------------------------------------------------


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path, label_column: int | str = -1, header: bool | None = None, map_labels: bool = False) -> Dataset:
    """Read a comma-separated file whose label column holds 0/1.

    ``header=None`` treats the first row as a header when any of its cells
    is non-numeric. With ``map_labels`` any two distinct label values are
    accepted and the rarer one becomes 1.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path} is empty")
    first = [c.strip() for c in rows[0][1]]
    if header is None:
        header = not all(_is_number(c) for c in first)
    names = first if header else None
    body = rows[1:] if header else rows
    if not body:
        raise DataError(f"{path} has no data rows")
    width = len(body[0][1])

    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if names is None or label_column not in names:
            raise DataError(f"label column {label_column!r} not found in header")
        li = names.index(label_column)
    else:
        li = int(label_column)
        if not -width <= li < width:
            raise DataError(f"label column {li} out of range for {width} columns")
        li %= width

    feats, labels = [], []
    for lineno, row in body:
        if len(row) != width:
            raise DataError(f"{path}:{lineno}: expected {width} fields, found {len(row)}")
        vals = []
        for j, cell in enumerate(row):
            if j == li:
                continue
            try:
                vals.append(float(cell))
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric value {cell.strip()!r} in column {j}") from None
        feats.append(vals)
        labels.append(row[li].strip())

    if map_labels:
        values, counts = np.unique(np.array(labels), return_counts=True)
        if values.size != 2:
            raise DataError(f"expected two distinct labels, found {values.size}")
        # rarer value becomes 1; on a tie the lexically larger value does
        minority = values[0] if counts[0] < counts[1] else values[1]
        y = np.array([1 if v == minority else 0 for v in labels], dtype=np.int64)
    else:
        y = np.empty(len(labels), dtype=np.int64)
        for k, ((lineno, _), v) in enumerate(zip(body, labels)):
            try:
                f = float(v)
            except ValueError:
                f = math.nan
            if f not in (0.0, 1.0):
                raise DataError(f"{path}:{lineno}: label {v!r} is not 0 or 1 (use map_labels)")
            y[k] = int(f)
    if y.min() == y.max():
        raise DataError(f"{path} contains a single class")
    fnames = [n for j, n in enumerate(names) if j != li] if names else None
    X = np.array(feats, dtype=np.float64).reshape(len(feats), width - 1)
    return Dataset(X, y, fnames)


def save_csv(data: Dataset, path, header: bool = True) -> None:
    """Write features then a ``label`` column; floats use shortest round-trip repr."""
    names = data.feature_names or [f"x{j}" for j in range(data.p)]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(list(names) + ["label"])
        for row, label in zip(data.X, data.y):
            w.writerow([repr(float(v)) for v in row] + [int(label)])


# --- preprocessing ---------------------------------------------------------


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    def apply(self, data: Dataset) -> Dataset:
        return Dataset((data.X - self.mean) / self.scale, data.y, data.feature_names, warn_balance=False)

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(np.asarray(d["mean"], dtype=np.float64), np.asarray(d["scale"], dtype=np.float64))


def fit_standardizer(train: Dataset) -> Standardizer:
    if train.n == 0:
        raise DataError("cannot standardize an empty dataset")
    mean = train.X.mean(axis=0)
    std = train.X.std(axis=0)
    # constant columns are only centred
    scale = np.where(std > 0, std, 1.0)
    return Standardizer(mean, scale)


def standardize(train: Dataset, others: Sequence[Dataset] = ()) -> tuple[Dataset, list[Dataset], Standardizer]:
    """Fit on ``train`` and apply the same transform to ``others``."""
    st = fit_standardizer(train)
    return st.apply(train), [st.apply(d) for d in others], st


# --- splitting -------------------------------------------------------------


@dataclass
class SplitPair:
    train: Dataset
    test: Dataset
    ratio: float
    train_idx: np.ndarray = field(repr=False)
    test_idx: np.ndarray = field(repr=False)


def stratified_split(data: Dataset, ratio: float = 0.75, seed: int = 0) -> SplitPair:
    """Per class, ``round(count * ratio)`` samples (half up) go to train."""
    if not 0.0 < ratio < 1.0:
        raise ParameterError(f"ratio must lie in (0, 1), got {ratio}")
    rng = RngStream(seed)
    train_parts, test_parts = [], []
    for cls in (0, 1):
        idx = np.flatnonzero(data.y == cls)
        if idx.size < 2:
            raise DataError(f"class {cls} has {idx.size} samples; at least 2 are needed to split")
        m = min(max(int(math.floor(idx.size * ratio + 0.5)), 1), idx.size - 1)
        perm = idx[rng.permutation(idx.size)]
        train_parts.append(perm[:m])
        test_parts.append(perm[m:])
    tr = np.sort(np.concatenate(train_parts))
    te = np.sort(np.concatenate(test_parts))
    return SplitPair(data.subset(tr), data.subset(te), ratio, tr, te)


def stratified_kfold(y, k: int, seed: int = 0) -> list[np.ndarray]:
    """Validation index sets of a stratified k-fold partition."""
    y = np.asarray(y)
    if k < 2:
        raise ParameterError("k must be at least 2")
    rng = RngStream(seed)
    folds = [[] for _ in range(k)]
    offset = 0
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        if idx.size < k:
            raise DataError(f"class {cls} has {idx.size} samples, fewer than k={k}")
        perm = idx[rng.permutation(idx.size)]
        for j, i in enumerate(perm):
            # rotating the start keeps fold sizes within one of each other overall
            folds[(j + offset) % k].append(i)
        offset += idx.size
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


# --- grid search -----------------------------------------------------------


@dataclass(frozen=True)
class GridCandidate:
    hidden: tuple[int, ...]
    beta: float

    def to_dict(self) -> dict:
        return {"hidden": list(self.hidden), "beta": self.beta}


@dataclass
class GridSearchResult:
    candidates: list[GridCandidate]
    scores: list[float]
    fold_scores: list[list[float]]
    selected_index: int
    metric: str

    @property
    def selected(self) -> GridCandidate:
        return self.candidates[self.selected_index]

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "candidates": [c.to_dict() for c in self.candidates],
            "scores": self.scores,
            "fold_scores": self.fold_scores,
            "selected_index": self.selected_index,
            "selected": self.selected.to_dict(),
        }


def make_grid(hidden_options, betas) -> list[GridCandidate]:
    return [GridCandidate(tuple(h), float(b)) for h in hidden_options for b in betas]


def _select(candidates: Sequence[GridCandidate], scores: Sequence[float]) -> int:
    # best score, then smaller beta, then fewer hidden units, then earlier position
    return min(
        range(len(candidates)),
        key=lambda i: (-scores[i], candidates[i].beta, sum(candidates[i].hidden), candidates[i].hidden, i),
    )


def _fold_job(args):
    from .metrics import evaluate
    from .nn import init_model
    from .trainer import predict_proba, train

    X, y, tr, va, cand, cfg, activation, init_seed, metric = args
    model = init_model((X.shape[1], *cand.hidden, 1), activation, RngStream(init_seed))
    fold_cfg = replace(cfg, beta=cand.beta)
    train(model, Dataset(X[tr], y[tr], warn_balance=False), fold_cfg)
    _, rep = evaluate(y[va], predict_proba(model, X[va]), cfg.threshold)
    return getattr(rep, metric)


def kfold_grid_search(
    data: Dataset,
    k: int,
    grid: Sequence[GridCandidate],
    base_cfg,
    seed: int = 0,
    activation: str = "sigmoid",
    metric: str = "gmean",
    workers: int = 1,
) -> GridSearchResult:
    """Pick the candidate with the best mean held-out ``metric`` over k stratified folds."""
    if not grid:
        raise ConfigError("grid is empty")
    if metric not in ("gmean", "f1"):
        raise ConfigError(f"unsupported selection metric {metric!r}")
    folds = stratified_kfold(data.y, k, seed)
    all_idx = np.arange(data.n)
    jobs = []
    for cand in grid:
        for f, va in enumerate(folds):
            tr = np.setdiff1d(all_idx, va, assume_unique=True)
            init_seed = seed * 1000 + f
            jobs.append((data.X, data.y, tr, va, cand, base_cfg, activation, init_seed, metric))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_fold_job, jobs))
    else:
        results = [_fold_job(j) for j in jobs]
    fold_scores = [results[i * k:(i + 1) * k] for i in range(len(grid))]
    scores = [math.fsum(fs) / k for fs in fold_scores]
    return GridSearchResult(list(grid), scores, fold_scores, _select(grid, scores), metric)
