"""Synthetic two-class simulations for the generalised key equation.

Each run draws a fresh imbalanced training set (1000 minority, 10000
majority) and a balanced test set (1000/1000) from the same class
conditionals, fits one model per lambda setting from a shared
initialisation, and records ``(1 - mean_{y=1} p) / mean_{y=0} p`` on the
test set. Run ``r`` always uses sub-stream ``r`` of the base seed, so
results do not depend on the number of workers or on execution order.

Sim1 is one-dimensional with logistic regression:
class 1 ~ N(-1.5, 1) + U(0, 0.5), class 0 ~ N(1.5, 1) + U(-0.5, 0).
``sim1_mode="sum"`` adds one normal and one uniform draw per sample;
``"mixture"`` draws each sample from one of the two components with equal
probability.

Sim2 is three-dimensional with a (3, 10, 1) sigmoid network:
class 1 ~ N((0,0,0), 1.2 I), class 0 ~ N((1,1,1), I). ``sigma_mode="std"``
reads the 1.2 as a per-axis standard deviation, ``"cov"`` as a variance.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .data import Dataset
from .errors import ConfigError, NumericError
from .keyeq import class_prob_stats, key_eq_generalized, key_eq_training
from .linalg import RngStream
from .loss import lambda_from_alpha
from .metrics import evaluate
from .nn import init_model
from .trainer import TrainConfig, predict_proba, train


@dataclass(frozen=True)
class LambdaSetting:
    """``alpha=None`` means lambda = 1/2; otherwise alpha*N0/(alpha*N0+N1)."""

    label: str
    alpha: float | None = None

    def lam(self, n0: int, n1: int) -> float:
        return 0.5 if self.alpha is None else lambda_from_alpha(self.alpha, n0, n1)

    def rhs(self, n0: int, n1: int) -> float:
        # N0(1-lam)/(N1 lam) simplifies to 1/alpha; computed in that form it is exact
        return n0 / n1 if self.alpha is None else 1.0 / self.alpha

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_SETTINGS = (
    LambdaSetting("1/2"),
    LambdaSetting("N0/(N0+N1)", 1.0),
    LambdaSetting("2N0/(2N0+N1)", 2.0),
)


@dataclass(frozen=True)
class SimConfig:
    sim: int = 2
    n1_train: int = 1000
    n0_train: int = 10000
    n1_test: int = 1000
    n0_test: int = 1000
    sim1_mode: str = "sum"
    sigma_mode: str = "std"
    learning_rate: float | None = None
    max_epochs: int | None = None
    grad_tol: float | None = None
    convergence_tol: float = 1e-6

    def __post_init__(self):
        if self.sim not in (1, 2):
            raise ConfigError(f"sim must be 1 or 2, got {self.sim}")
        if self.sim1_mode not in ("sum", "mixture"):
            raise ConfigError(f"sim1_mode must be 'sum' or 'mixture', got {self.sim1_mode!r}")
        if self.sigma_mode not in ("std", "cov"):
            raise ConfigError(f"sigma_mode must be 'std' or 'cov', got {self.sigma_mode!r}")

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (1, 1) if self.sim == 1 else (3, 10, 1)

    def train_config(self, lam: float) -> TrainConfig:
        # logistic fits are convex and cheap; the 3-10-1 net gets a bounded budget
        lr, epochs, gtol = (2.0, 5000, 1e-7) if self.sim == 1 else (4.0, 1000, 1e-6)
        return TrainConfig(
            lam=lam,
            learning_rate=self.learning_rate if self.learning_rate is not None else lr,
            max_epochs=self.max_epochs if self.max_epochs is not None else epochs,
            grad_tol=self.grad_tol if self.grad_tol is not None else gtol,
            convergence_tol=self.convergence_tol,
        )

    def to_dict(self) -> dict:
        return asdict(self)


def _labels(n1: int, n0: int) -> np.ndarray:
    return np.concatenate([np.ones(n1, dtype=np.int64), np.zeros(n0, dtype=np.int64)])


def _sim1_class(rng: RngStream, n: int, mu: float, lo: float, hi: float, mode: str) -> np.ndarray:
    normal = rng.normal(mu, 1.0, n)
    uniform = rng.uniform(lo, hi, n)
    if mode == "sum":
        return normal + uniform
    pick = rng.uniform(0.0, 1.0, n) < 0.5
    return np.where(pick, normal, uniform)


def sample_sim1(rng: RngStream, n1: int, n0: int, mode: str = "sum") -> Dataset:
    x1 = _sim1_class(rng, n1, -1.5, 0.0, 0.5, mode)
    x0 = _sim1_class(rng, n0, 1.5, -0.5, 0.0, mode)
    return Dataset(np.concatenate([x1, x0])[:, None], _labels(n1, n0), warn_balance=False)


def sample_sim2(rng: RngStream, n1: int, n0: int, sigma_mode: str = "std") -> Dataset:
    s1 = 1.2 if sigma_mode == "std" else math.sqrt(1.2)
    x1 = rng.normal(0.0, s1, (n1, 3))
    x0 = rng.normal(1.0, 1.0, (n0, 3))
    return Dataset(np.vstack([x1, x0]), _labels(n1, n0), warn_balance=False)


def sample(cfg: SimConfig, rng: RngStream, n1: int, n0: int) -> Dataset:
    if cfg.sim == 1:
        return sample_sim1(rng, n1, n0, cfg.sim1_mode)
    return sample_sim2(rng, n1, n0, cfg.sigma_mode)


@dataclass
class RunResult:
    run: int
    label: str
    lam: float
    ok: bool
    lhs: float | None = None
    train_residual: float | None = None
    mean1: float | None = None
    mean0: float | None = None
    var1: float | None = None
    var0: float | None = None
    recall: float | None = None
    gmean: float | None = None
    epochs: int = 0
    error: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def simulate_run(cfg: SimConfig, settings: Sequence[LambdaSetting], base_seed: int, run: int) -> list[RunResult]:
    stream = RngStream(base_seed).substream(run)
    data_rng = stream.substream(0)
    train_set = sample(cfg, data_rng, cfg.n1_train, cfg.n0_train)
    test_set = sample(cfg, data_rng, cfg.n1_test, cfg.n0_test)
    init = init_model(cfg.layer_sizes, "sigmoid", stream.substream(1))
    out = []
    for s in settings:
        lam = s.lam(train_set.n0, train_set.n1)
        model = init.copy()
        try:
            rep = train(model, train_set, cfg.train_config(lam))
        except NumericError as exc:
            out.append(RunResult(run, s.label, lam, False, error=str(exc)))
            continue
        if not rep.converged:
            out.append(RunResult(run, s.label, lam, False, epochs=rep.epochs, error="not converged"))
            continue
        p_train = predict_proba(model, train_set.X)
        p_test = predict_proba(model, test_set.X)
        gen = key_eq_generalized(p_test, test_set.y, lam, train_set.n0, train_set.n1)
        tr = key_eq_training(p_train, train_set.y, lam)
        st = class_prob_stats(p_test, test_set.y)
        _, metrics = evaluate(test_set.y, p_test, 0.5)
        out.append(RunResult(
            run, s.label, lam, True, gen.lhs, tr.relative_residual,
            st.mean1, st.mean0, st.var1, st.var0, metrics.recall, metrics.gmean, rep.epochs,
        ))
    return out


def _run_job(args):
    return simulate_run(*args)


@dataclass
class SimulationSummary:
    label: str
    lam: float
    rhs: float
    runs: int  # successful runs
    failed: int
    mean_lhs: float | None
    std_lhs: float | None  # sample std, None with fewer than two runs
    max_train_residual: float | None
    mean_p1: float | None = None
    mean_p0: float | None = None
    lhs_values: list[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        del d["lhs_values"]
        return d


def summarize(results: Sequence[RunResult], settings: Sequence[LambdaSetting], n0: int, n1: int) -> list[SimulationSummary]:
    summaries = []
    for s in settings:
        rs = sorted((r for r in results if r.label == s.label), key=lambda r: r.run)
        good = [r for r in rs if r.ok]
        lam = s.lam(n0, n1)
        vals = [r.lhs for r in good]
        mean = math.fsum(vals) / len(vals) if vals else None
        std = math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / (len(vals) - 1)) if len(vals) > 1 else None
        summaries.append(SimulationSummary(
            label=s.label,
            lam=lam,
            rhs=s.rhs(n0, n1),
            runs=len(good),
            failed=len(rs) - len(good),
            mean_lhs=mean,
            std_lhs=std,
            max_train_residual=max((r.train_residual for r in good), default=None),
            mean_p1=math.fsum(r.mean1 for r in good) / len(good) if good else None,
            mean_p0=math.fsum(r.mean0 for r in good) / len(good) if good else None,
            lhs_values=vals,
        ))
    return summaries


def run_simulation(
    cfg: SimConfig,
    runs: int,
    settings: Sequence[LambdaSetting] = DEFAULT_SETTINGS,
    base_seed: int = 0,
    workers: int = 1,
) -> tuple[list[SimulationSummary], list[RunResult]]:
    if runs < 1:
        raise ConfigError("runs must be at least 1")
    jobs = [(cfg, tuple(settings), base_seed, r) for r in range(runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            per_run = list(ex.map(_run_job, jobs))
    else:
        per_run = [_run_job(j) for j in jobs]
    results = [r for rs in per_run for r in rs]
    return summarize(results, settings, cfg.n0_train, cfg.n1_train), results


def run_sim1(runs: int, lambda_settings=DEFAULT_SETTINGS, base_seed: int = 0, workers: int = 1, **overrides):
    return run_simulation(SimConfig(sim=1, **overrides), runs, lambda_settings, base_seed, workers)


def run_sim2(runs: int, lambda_settings=DEFAULT_SETTINGS, base_seed: int = 0, workers: int = 1, **overrides):
    return run_simulation(SimConfig(sim=2, **overrides), runs, lambda_settings, base_seed, workers)


def with_overrides(cfg: SimConfig, **kw) -> SimConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
