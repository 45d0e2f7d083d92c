"""Command-line interface: ``crcen {train,verify,simulate,sweep,bench,replay}``.

Every option can also come from an environment variable named
``CRCEN_<OPTION>`` (upper case, dashes as underscores, e.g.
``CRCEN_LR=0.1``). Command-line flags win over the environment, which wins
over built-in defaults.

Each command writes JSON reports into ``--out`` (sorted keys, fixed
layout, no timings) that embed a manifest of the resolved configuration;
``crcen replay <report.json>`` re-runs a command from that manifest.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    Dataset,
    Standardizer,
    kfold_grid_search,
    load_csv,
    make_grid,
    standardize,
    stratified_split,
)
from .errors import ConfigError, CrcenError
from .keyeq import class_prob_stats, key_eq_generalized, key_eq_training
from .linalg import RngStream
from .loss import lambda_from_alpha
from .metrics import evaluate, expense
from .nn import ACTIVATIONS, init_model, load_model, save_model
from .simulation import DEFAULT_SETTINGS, SimConfig, run_simulation
from .trainer import TrainConfig, loss_and_gradient, predict_proba, train

ENV_PREFIX = "CRCEN_"

# options that never influence results and so stay out of manifests
_VOLATILE = {"func", "out", "workers", "command"}


def _env(dest: str, default, conv=str):
    raw = os.environ.get(ENV_PREFIX + dest.upper())
    if raw is None:
        return default
    if conv is bool:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return conv(raw)


def _hidden(text: str) -> tuple[int, ...]:
    text = text.strip()
    if text in ("", "0", "none"):
        return ()
    try:
        sizes = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad hidden layer list {text!r}") from None
    if any(s < 1 for s in sizes):
        raise argparse.ArgumentTypeError("hidden sizes must be positive")
    return sizes


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _hidden_grid(text: str) -> list[tuple[int, ...]]:
    return [_hidden(part) for part in text.split(";")]


# --- argument parsing ------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=_env("seed", 0, int))
    p.add_argument("--out", default=_env("out", "crcen_out"), help="output directory")
    p.add_argument("--workers", type=int, default=_env("workers", os.cpu_count() or 1, int))


def _add_training(p: argparse.ArgumentParser, weight: bool = True) -> None:
    if weight:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--lambda", dest="lam", type=float, default=_env("lambda", None, float),
                       help="class weight in (0, 1)")
        g.add_argument("--alpha", type=float, default=_env("alpha", None, float),
                       help="lambda = alpha*N0/(alpha*N0+N1); default alpha=1")
    p.add_argument("--beta", type=float, default=_env("beta", 0.0, float), help="L2 coefficient")
    p.add_argument("--hidden", type=_hidden, default=_env("hidden", (10,), _hidden),
                   help="comma-separated hidden sizes, '0' for logistic regression")
    p.add_argument("--activation", choices=ACTIVATIONS, default=_env("activation", "sigmoid"))
    p.add_argument("--lr", type=float, default=_env("lr", 1.0, float))
    p.add_argument("--epochs", type=int, default=_env("epochs", 5000, int))
    p.add_argument("--tol", type=float, default=_env("tol", 1e-6, float),
                   help="output-bias gradient tolerance (per sample)")
    p.add_argument("--grad-tol", type=float, default=_env("grad_tol", 1e-6, float))
    p.add_argument("--batch-size", type=int, default=_env("batch_size", None, int),
                   help="mini-batch size; omit for full batch")
    p.add_argument("--threshold", type=float, default=_env("threshold", 0.5, float))
    p.add_argument("--no-standardize", action="store_true", default=_env("no_standardize", False, bool))


def _add_csv(p: argparse.ArgumentParser) -> None:
    p.add_argument("--csv", required=_env("csv", None) is None, default=_env("csv", None))
    p.add_argument("--label-column", default=_env("label_column", "-1"),
                   help="label column name or index (default: last)")
    p.add_argument("--map-labels", action="store_true", default=_env("map_labels", False, bool),
                   help="accept any two label values; the rarer becomes 1")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crcen", description="Class-wise reweighted cross-entropy training and key-equation checks."
    )
    parser.add_argument("--version", action="version", version=f"crcen {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train on a stratified split of a CSV file")
    _add_csv(p)
    _add_training(p)
    p.add_argument("--ratio", type=float, default=_env("ratio", 0.75, float))
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("verify", help="check the key equation for a saved model on a CSV file")
    p.add_argument("--model", required=True)
    _add_csv(p)
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="weight the model was trained with (default: from the model file)")
    p.add_argument("--no-standardize", action="store_true", default=False)
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="run the Sim1/Sim2 key-equation simulations")
    p.add_argument("--sim", type=int, choices=(1, 2), default=_env("sim", 2, int))
    p.add_argument("--runs", type=int, default=_env("runs", 100, int))
    p.add_argument("--sim1-mode", choices=("sum", "mixture"), default=_env("sim1_mode", "sum"))
    p.add_argument("--sigma-mode", choices=("std", "cov"), default=_env("sigma_mode", "std"))
    p.add_argument("--lr", type=float, default=_env("lr", None, float), help="default depends on --sim")
    p.add_argument("--epochs", type=int, default=_env("epochs", None, int), help="default depends on --sim")
    p.add_argument("--tol", type=float, default=_env("tol", 1e-6, float))
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="train one model per alpha and report expense")
    _add_csv(p)
    _add_training(p, weight=False)
    p.add_argument("--alphas", type=_floats, default=_env("alphas", [0.5, 1.0, 1.5, 2.0], _floats))
    p.add_argument("--with-half", action="store_true", default=_env("with_half", False, bool),
                   help="prepend the unweighted lambda=1/2 model to the sweep")
    p.add_argument("--ratio", type=float, default=_env("ratio", 0.75, float))
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="grid-search on split 1, then evaluate over repeated splits")
    _add_csv(p)
    _add_training(p)
    p.add_argument("--repeats", type=int, default=_env("repeats", 4, int))
    p.add_argument("--folds", type=int, default=_env("folds", 4, int))
    p.add_argument("--grid-hidden", type=_hidden_grid, default=_env("grid_hidden", [(5,), (10,), (20,)], _hidden_grid),
                   help="';'-separated hidden-layer options, e.g. '5;10;20'")
    p.add_argument("--grid-beta", type=_floats, default=_env("grid_beta", [0.0, 0.01, 0.1], _floats))
    p.add_argument("--cv-metric", choices=("gmean", "f1"), default=_env("cv_metric", "gmean"))
    p.add_argument("--ratio", type=float, default=_env("ratio", 0.75, float))
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("replay", help="re-run the command recorded in a report's manifest")
    p.add_argument("report")
    p.add_argument("--out", default=None, help="output directory (default: the recorded one)")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_replay)
    return parser


# --- helpers ---------------------------------------------------------------


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable, allow_nan=False) + "\n"


def manifest(args, outputs: list[str]) -> dict:
    config = {k: v for k, v in vars(args).items() if k not in _VOLATILE}
    return {
        "command": args.command,
        "config": json.loads(json.dumps(config, default=_jsonable)),
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "outputs": outputs,
    }


def _write_report(args, name: str, result: dict, extra_outputs: list[str] = ()) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = {"manifest": manifest(args, [name, *extra_outputs]), "result": result}
    path = out / name
    path.write_text(_dumps(doc))
    return path


def _load(args) -> Dataset:
    return load_csv(args.csv, label_column=args.label_column, map_labels=args.map_labels)


def _resolve_lambda(args, n0: int, n1: int) -> float:
    if getattr(args, "lam", None) is not None:
        return args.lam
    alpha = args.alpha if getattr(args, "alpha", None) is not None else 1.0
    return lambda_from_alpha(alpha, n0, n1)


def _train_cfg(args, lam: float, beta: float | None = None) -> TrainConfig:
    return TrainConfig(
        lam=lam,
        learning_rate=args.lr,
        max_epochs=args.epochs,
        beta=args.beta if beta is None else beta,
        batch_size=args.batch_size,
        convergence_tol=args.tol,
        grad_tol=args.grad_tol,
        seed=args.seed,
        threshold=args.threshold,
    )


def _prepare(args, split_seed: int):
    data = _load(args)
    split = stratified_split(data, args.ratio, split_seed)
    train_ds, test_ds, st = split.train, split.test, None
    if not args.no_standardize:
        train_ds, (test_ds,), st = standardize(train_ds, [test_ds])
    return data, train_ds, test_ds, st


def _fit_eval(args, train_ds: Dataset, test_ds: Dataset, lam: float, hidden=None, beta=None, seed=None):
    seed = args.seed if seed is None else seed
    hidden = args.hidden if hidden is None else hidden
    cfg = _train_cfg(args, lam, beta)
    model = init_model((train_ds.p, *hidden, 1), args.activation, RngStream(seed).substream(1))
    rep = train(model, train_ds, cfg)
    p_train = predict_proba(model, train_ds.X)
    p_test = predict_proba(model, test_ds.X)
    cm, metrics = evaluate(test_ds.y, p_test, args.threshold)
    result = {
        "lambda": lam,
        "train_counts": {"n0": train_ds.n0, "n1": train_ds.n1},
        "test_counts": {"n0": test_ds.n0, "n1": test_ds.n1},
        "training": rep.to_dict(),
        "confusion": cm.to_dict(),
        "metrics": metrics.to_dict(),
        "key_equation_training": key_eq_training(p_train, train_ds.y, lam).to_dict(),
        "key_equation_test": key_eq_generalized(p_test, test_ds.y, lam, train_ds.n0, train_ds.n1).to_dict(),
        "test_probability_stats": class_prob_stats(p_test, test_ds.y).to_dict(),
    }
    return model, rep, cm, metrics, result


def _fmt(v, spec=".4f") -> str:
    if v is None:
        return "undefined"
    return format(v, spec)


# --- commands --------------------------------------------------------------


def cmd_train(args) -> int:
    data, train_ds, test_ds, st = _prepare(args, args.seed)
    lam = _resolve_lambda(args, train_ds.n0, train_ds.n1)
    model, rep, cm, metrics, result = _fit_eval(args, train_ds, test_ds, lam)
    result["data"] = data.summary()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = {
        "lambda": lam,
        "train_counts": {"n0": train_ds.n0, "n1": train_ds.n1},
        "standardizer": st.to_dict() if st else None,
    }
    save_model(model, out / "model.json", meta)
    _write_report(args, "train_report.json", result, ["model.json"])
    ke = result["key_equation_training"]
    print(f"lambda            {lam:.6f}")
    print(f"converged         {rep.converged} after {rep.epochs} epochs")
    print(f"confusion         tp={cm.tp} fp={cm.fp} fn={cm.fn} tn={cm.tn}")
    print(f"precision/recall  {metrics.precision:.4f} / {metrics.recall:.4f}")
    print(f"F1 / G-mean       {metrics.f1:.4f} / {metrics.gmean:.4f}")
    print(f"key eq (train)    lhs={ke['lhs']:.6f} rhs={ke['rhs']:.6f} residual={ke['relative_residual']:.2e}")
    return 0


def cmd_verify(args) -> int:
    model, meta = load_model(args.model)
    data = _load(args)
    st = meta.get("standardizer")
    if st and not args.no_standardize:
        data = Standardizer.from_dict(st).apply(data)
    lam = args.lam if args.lam is not None else meta.get("lambda")
    if lam is None:
        raise ConfigError("the model file records no lambda; pass --lambda")
    p = predict_proba(model, data.X)
    _, grads = loss_and_gradient(model, data.X, data.y, lam)
    result = {
        "lambda": lam,
        "data": data.summary(),
        "output_bias_grad": grads.output_bias / data.n,
        "key_equation_training": key_eq_training(p, data.y, lam).to_dict(),
        "probability_stats": class_prob_stats(p, data.y).to_dict(),
    }
    counts = meta.get("train_counts")
    if counts:
        result["key_equation_generalized"] = key_eq_generalized(p, data.y, lam, counts["n0"], counts["n1"]).to_dict()
    _write_report(args, "verify_report.json", result)
    ke = result["key_equation_training"]
    print(f"lambda {lam:.6f}  lhs={ke['lhs']:.6f}  rhs={ke['rhs']:.6f}  residual={ke['relative_residual']:.2e}")
    if counts:
        kg = result["key_equation_generalized"]
        print(f"generalized       lhs={kg['lhs']:.6f}  rhs={kg['rhs']:.6f}")
    return 0


def cmd_simulate(args) -> int:
    if args.runs < 2:
        raise ConfigError("simulate needs --runs >= 2 to report a standard deviation")
    cfg = SimConfig(
        sim=args.sim,
        sim1_mode=args.sim1_mode,
        sigma_mode=args.sigma_mode,
        learning_rate=args.lr,
        max_epochs=args.epochs,
        convergence_tol=args.tol,
    )
    summaries, results = run_simulation(cfg, args.runs, DEFAULT_SETTINGS, args.seed, args.workers)
    result = {
        "sim": args.sim,
        "sim_config": cfg.to_dict(),
        "summaries": [s.to_dict() for s in summaries],
        "runs": [r.to_dict() for r in results],
    }
    _write_report(args, f"simulate_sim{args.sim}.json", result)
    print(f"Sim{args.sim}, {args.runs} runs")
    print(f"{'lambda':>14} {'RHS':>8} {'LHS mean':>10} {'(std)':>9} {'failed':>7}")
    for s in summaries:
        std = f"({_fmt(s.std_lhs, '.3f')})"
        print(f"{s.label:>14} {s.rhs:>8.3f} {_fmt(s.mean_lhs, '.3f'):>10} {std:>9} {s.failed:>7d}")
    return 0


def cmd_sweep(args) -> int:
    if len(args.alphas) < 2:
        raise ConfigError("sweep needs at least two alpha values")
    if any(a <= 0 for a in args.alphas):
        raise ConfigError("alpha values must be positive")
    _, train_ds, test_ds, _ = _prepare(args, args.seed)
    points = [("half", None)] if args.with_half else []
    points += [(a, a) for a in args.alphas]
    rows = []
    prev_cm = None
    for alpha_label, alpha in points:
        lam = 0.5 if alpha is None else lambda_from_alpha(alpha, train_ds.n0, train_ds.n1)
        _, rep, cm, metrics, _ = _fit_eval(args, train_ds, test_ds, lam)
        row = {
            "alpha": alpha_label,
            "lambda": lam,
            "fn": cm.fn,
            "fp": cm.fp,
            "confusion": cm.to_dict(),
            "metrics": metrics.to_dict(),
            "converged": rep.converged,
            "expense": None,
            "expense_defined": False,
        }
        if prev_cm is not None:
            e = expense(prev_cm, cm)
            row["expense"], row["expense_defined"] = e, e is not None
        rows.append(row)
        prev_cm = cm
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["alpha\tlambda\tfn\tfp\texpense\tf1\tgmean"]
    for i, r in enumerate(rows):
        e = "NA" if i == 0 else ("undefined" if r["expense"] is None else repr(r["expense"]))
        lines.append(f"{r['alpha']}\t{r['lambda']!r}\t{r['fn']}\t{r['fp']}\t{e}\t"
                     f"{r['metrics']['f1']!r}\t{r['metrics']['gmean']!r}")
    (out / "sweep.tsv").write_text("\n".join(lines) + "\n")
    _write_report(args, "sweep_report.json", {"points": rows, "expenses": [r["expense"] for r in rows[1:]]},
                  ["sweep.tsv"])
    print(f"{'alpha':>6} {'lambda':>8} {'FN':>5} {'FP':>5} {'expense':>10} {'F1':>7} {'Gm':>7}")
    for i, r in enumerate(rows):
        e = "" if i == 0 else _fmt(r["expense"], ".2f")
        print(f"{r['alpha']!s:>6} {r['lambda']:>8.4f} {r['fn']:>5d} {r['fp']:>5d} {e:>10} "
              f"{r['metrics']['f1']:>7.3f} {r['metrics']['gmean']:>7.3f}")
    return 0


def cmd_bench(args) -> int:
    if args.repeats < 1:
        raise ConfigError("repeats must be at least 1")
    grid = make_grid(args.grid_hidden, args.grid_beta)
    splits = []
    for i in range(args.repeats):
        _, train_ds, test_ds, _ = _prepare(args, args.seed + i)
        splits.append((train_ds, test_ds))
    first_train = splits[0][0]
    lam0 = _resolve_lambda(args, first_train.n0, first_train.n1)
    gs = kfold_grid_search(first_train, args.folds, grid, _train_cfg(args, lam0), seed=args.seed,
                           activation=args.activation, metric=args.cv_metric, workers=args.workers)
    chosen = gs.selected
    per_split = []
    for i, (train_ds, test_ds) in enumerate(splits):
        lam = _resolve_lambda(args, train_ds.n0, train_ds.n1)
        _, _, cm, metrics, _ = _fit_eval(args, train_ds, test_ds, lam, chosen.hidden, chosen.beta, args.seed + i)
        per_split.append({"split": i, "lambda": lam, "confusion": cm.to_dict(), "metrics": metrics.to_dict()})
    mean_f1 = math.fsum(s["metrics"]["f1"] for s in per_split) / len(per_split)
    mean_gm = math.fsum(s["metrics"]["gmean"] for s in per_split) / len(per_split)
    result = {"grid_search": gs.to_dict(), "splits": per_split, "mean_f1": mean_f1, "mean_gmean": mean_gm}
    _write_report(args, "bench_report.json", result)
    print(f"selected hidden={list(chosen.hidden)} beta={chosen.beta:g} (CV {gs.metric}={gs.scores[gs.selected_index]:.4f})")
    for s in per_split:
        print(f"split {s['split']}: F1={s['metrics']['f1']:.4f} Gm={s['metrics']['gmean']:.4f}")
    print(f"mean   F1={mean_f1:.4f} Gm={mean_gm:.4f}")
    return 0


COMMANDS = {
    "train": cmd_train,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "bench": cmd_bench,
}


def cmd_replay(args) -> int:
    try:
        doc = json.loads(Path(args.report).read_text())
        man = doc["manifest"]
        func = COMMANDS[man["command"]]
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{args.report} does not hold a usable manifest: {exc}") from exc
    config = dict(man["config"])
    for key in ("hidden",):
        if key in config:
            config[key] = tuple(config[key])
    if "grid_hidden" in config:
        config["grid_hidden"] = [tuple(h) for h in config["grid_hidden"]]
    ns = argparse.Namespace(**config, command=man["command"], func=func, workers=args.workers,
                            out=args.out if args.out is not None else str(Path(args.report).parent))
    return func(ns)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CrcenError as exc:
        print(f"crcen {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
