"""Command line: ``multisol {train,sweep,scores,heatmap}``.

Exit codes: 0 on success, 1 on runtime failure, 2 on invalid configuration.
"""

from __future__ import annotations

import argparse
import copy
import logging
import sys
from pathlib import Path

import numpy as np

from .datasets import MNIST_FILES
from .dirichlet import DirichletPrior
from .experiments import ConfigError, ExperimentConfig, ResultsTable, build_splits, run_many, _write_csv
from .nn import MlpModel
from .scores import ScoreKind
from .thresholds import BarycentricGrid, heatmap_export, scan

log = logging.getLogger("multisol")

SWEEP_AXES = ("alpha", "lambda")
SCORE_LOSSES = ("ce", "weighted_ce", "squared") + tuple(f"multisol_{k.value}" for k in ScoreKind)


def _prepare(args) -> tuple[ExperimentConfig, Path]:
    cfg = ExperimentConfig.load(args.config)
    if args.seeds is not None:
        cfg.seeds = args.seeds
    if args.jobs is not None:
        cfg.jobs = args.jobs
    out = args.out or cfg.out
    if out is None:
        raise ConfigError(["output directory: pass --out or set 'out' in the config"])
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    cfg.out = str(out)
    # echo the effective configuration so the run can be repeated from it
    cfg.save(out / "config.effective.json")
    return cfg, out


def cmd_train(args) -> ResultsTable:
    cfg, out = _prepare(args)
    table = ResultsTable()
    for tag, seed, report, model in run_many(cfg, [(cfg.train, None)], cfg.jobs):
        run_dir = out / f"seed{seed}"
        run_dir.mkdir(exist_ok=True)
        report.to_json(run_dir / "report.json")
        model.save(run_dir / "model.ckpt")
        table.add(report.loss, None, seed, report)
        log.info("seed %d: test accuracy %.4f, macro F1 %.4f", seed, report.test_metrics["accuracy"], report.test_metrics["macro_f1"])
    table.write(out / "runs.csv")
    table.write_aggregate(out / "aggregate.csv")
    return table


def cmd_sweep(args) -> ResultsTable:
    if args.axis not in SWEEP_AXES:
        raise ConfigError([f"--axis: must be one of {SWEEP_AXES}, got {args.axis!r}"])
    if not args.values:
        raise ConfigError(["--values: need at least one value"])
    if any(not v > 0 for v in args.values):
        raise ConfigError([f"--values: all values must be positive, got {args.values}"])
    cfg, out = _prepare(args)
    jobs = []
    for v in args.values:
        tc = copy.deepcopy(cfg.train)
        tc.loss = "multisol"
        if args.axis == "alpha":
            tc.multisol.alpha = v
        else:
            tc.multisol.lam = v
        jobs.append((tc, v))
    ce = copy.deepcopy(cfg.train)
    ce.loss = "ce"
    jobs.append((ce, None))
    table = ResultsTable(args.axis)
    for tag, seed, report, _ in run_many(cfg, jobs, cfg.jobs):
        table.add(report.loss, tag, seed, report)
    table.write(out / "sweep_runs.csv")
    table.write_aggregate(out / "sweep_aggregate.csv")
    label = jobs[0][0].label
    rows = []
    for v in args.values:
        rows.append({
            args.axis: v,
            "multisol_macro_f1": table.column(label, v, "macro_f1").mean(),
            "multisol_accuracy": table.column(label, v, "accuracy").mean(),
            "ce_macro_f1": table.column("ce", "", "macro_f1").mean(),
            "ce_accuracy": table.column("ce", "", "accuracy").mean(),
        })
    _write_csv(out / "sweep_table.csv", rows)
    return table


def cmd_scores(args) -> ResultsTable:
    cfg, out = _prepare(args)
    jobs = []
    for name in SCORE_LOSSES:
        tc = copy.deepcopy(cfg.train)
        if name.startswith("multisol_"):
            tc.loss = "multisol"
            tc.multisol.score = ScoreKind.parse(name[len("multisol_"):])
        else:
            tc.loss = name
        jobs.append((tc, None))
    table = ResultsTable()
    for tag, seed, report, _ in run_many(cfg, jobs, cfg.jobs):
        table.add(report.loss, None, seed, report)
    table.write(out / "scores_runs.csv")
    table.write_aggregate(out / "scores_aggregate.csv")
    rows = []
    for name in SCORE_LOSSES:
        row = {"loss": name}
        for col in ("accuracy", "macro_precision", "macro_recall", "macro_f1"):
            v = table.column(name, "", col)
            row[col] = f"{v.mean():.4f} ({v.min():.4f}-{v.max():.4f})"
        row["seconds"] = float(table.column(name, "", "seconds").mean())
        rows.append(row)
    _write_csv(out / "scores_table.csv", rows)
    return table


def cmd_heatmap(args) -> Path:
    cfg = ExperimentConfig.load(args.config)
    ckpt = Path(args.checkpoint)
    if not ckpt.exists():
        raise ConfigError([f"--checkpoint: file not found: {ckpt}"])
    model = MlpModel.load(ckpt)
    if model.m != 3:
        raise ConfigError([f"heatmap export is only supported for m=3 models (ternary plot); checkpoint has m={model.m}"])
    if args.grid_k is None or args.grid_k < 0:
        raise ConfigError([f"--grid-k: need a non-negative integer, got {args.grid_k}"])
    _, _, test = build_splits(cfg)
    if test.d != model.sizes[0]:
        raise ConfigError([f"dataset has {test.d} features but the checkpoint expects {model.sizes[0]}"])
    alpha = cfg.train.multisol.alpha if args.alpha is None else args.alpha
    if not alpha > 0:
        raise ConfigError([f"--alpha: must be positive, got {alpha}"])
    result = scan(model.predict(test.features), test.labels, BarycentricGrid.build(args.grid_k, 3))
    out = Path(args.out or cfg.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    path = heatmap_export(result, out / "heatmap.csv", DirichletPrior.symmetric(alpha, 3))
    log.info("best top-1 accuracy %.4f at threshold %s", result.best_score, np.round(result.best_threshold, 4))
    return path


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text: str) -> list[int]:
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multisol", description="Train and evaluate score-oriented multiclass losses.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seeds=True):
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", help="output directory (overrides the config)")
        if seeds:
            p.add_argument("--seeds", type=_int_list, help="comma list or range like 0..4")
            p.add_argument("--jobs", type=int, help="parallel training processes")

    common(sub.add_parser("train", help="train one model per seed"))
    p = sub.add_parser("sweep", help="MultiSOL over alpha or lambda values plus a CE baseline")
    common(p)
    p.add_argument("--axis", required=True)
    p.add_argument("--values", type=_float_list, required=True, help="comma-separated values")
    common(sub.add_parser("scores", help="CE, weighted CE, squared and MultiSOL for every score"))
    p = sub.add_parser("heatmap", help="scan thresholds on the simplex for a 3-class checkpoint")
    common(p, seeds=False)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--grid-k", type=int, default=60)
    p.add_argument("--alpha", type=float)
    return parser


COMMANDS = {"train": cmd_train, "sweep": cmd_sweep, "scores": cmd_scores, "heatmap": cmd_heatmap}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        if any("idx" in e.lower() or "images" in e or "labels" in e for e in exc.errors):
            print("expected MNIST file names: " + ", ".join(MNIST_FILES.values()), file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report any runtime failure as exit code 1
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
