"""Experiment configs, repeated-seed runs and result tables used by the command line."""

from __future__ import annotations

import copy
import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datasets import BlobSpec, Dataset, load_csv, load_idx, make_blobs, partition, split
from .nn import MlpModel, TrainConfig, TrainReport, train

METRICS = ("accuracy", "macro_f1", "macro_precision", "macro_recall", "macro_accuracy")


class ConfigError(ValueError):
    """Invalid experiment configuration; ``errors`` lists every offending field."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


_DATASET_KEYS = {
    "blobs": {"kind", "m", "counts", "std", "radius", "seed"},
    "idx": {"kind", "train_images", "train_labels", "test_images", "test_labels", "m"},
    "csv": {"kind", "path", "label_column", "m"},
}
_SPLIT_KEYS = {"fractions", "stratified", "seed", "val_fraction"}
_TOP_KEYS = {"dataset", "split", "model", "train", "seeds", "jobs", "out"}


@dataclass
class ExperimentConfig:
    dataset: dict
    split: dict = field(default_factory=dict)
    model: dict = field(default_factory=lambda: {"hidden": [128, 64]})
    train: TrainConfig = field(default_factory=TrainConfig)
    seeds: list = field(default_factory=lambda: [0])
    jobs: int = 1
    out: str | None = None

    @classmethod
    def from_dict(cls, raw: dict, check_paths: bool = True) -> "ExperimentConfig":
        errors = []
        if not isinstance(raw, dict):
            raise ConfigError(["config must be a JSON object"])
        for k in sorted(set(raw) - _TOP_KEYS):
            errors.append(f"unknown key {k!r}")
        ds = raw.get("dataset")
        if not isinstance(ds, dict):
            errors.append("dataset: required object")
            ds = {}
        else:
            ds = dict(ds)
            kind = ds.get("kind")
            if kind not in _DATASET_KEYS:
                errors.append(f"dataset.kind: must be one of {sorted(_DATASET_KEYS)}, got {kind!r}")
            else:
                for k in sorted(set(ds) - _DATASET_KEYS[kind]):
                    errors.append(f"dataset.{k}: unknown key for kind {kind!r}")
                errors += _check_dataset(ds, check_paths)
        sp = dict(raw.get("split", {}))
        for k in sorted(set(sp) - _SPLIT_KEYS):
            errors.append(f"split.{k}: unknown key")
        sp.setdefault("fractions", [0.8, 0.1, 0.1])
        sp.setdefault("stratified", True)
        sp.setdefault("seed", 0)
        sp.setdefault("val_fraction", 0.1)
        fr = sp["fractions"]
        if not (isinstance(fr, list) and len(fr) == 3 and all(isinstance(f, (int, float)) and f > 0 for f in fr)
                and abs(sum(fr) - 1) < 1e-9):
            errors.append(f"split.fractions: need three positive numbers summing to 1, got {fr!r}")
        if not 0 < sp["val_fraction"] < 1:
            errors.append(f"split.val_fraction: must lie in (0, 1), got {sp['val_fraction']!r}")
        model = dict(raw.get("model", {"hidden": [128, 64]}))
        for k in sorted(set(model) - {"hidden"}):
            errors.append(f"model.{k}: unknown key")
        hidden = model.setdefault("hidden", [128, 64])
        if not (isinstance(hidden, list) and all(isinstance(h, int) and h > 0 for h in hidden)):
            errors.append(f"model.hidden: need a list of positive integers, got {hidden!r}")
        tc = TrainConfig()
        try:
            tc = TrainConfig.from_dict(dict(raw.get("train", {})))
        except (ValueError, TypeError) as exc:
            errors.append(f"train: {exc}")
        seeds = raw.get("seeds", [0])
        if not (isinstance(seeds, list) and seeds and all(isinstance(s, int) for s in seeds)):
            errors.append(f"seeds: need a non-empty list of integers, got {seeds!r}")
        jobs = raw.get("jobs", 1)
        if not (isinstance(jobs, int) and jobs >= 1):
            errors.append(f"jobs: need a positive integer, got {jobs!r}")
        if errors:
            raise ConfigError(errors)
        return cls(ds, sp, model, tc, list(seeds), jobs, raw.get("out"))

    @classmethod
    def load(cls, path, check_paths: bool = True) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError([f"config file not found: {path}"])
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError([f"{path}: invalid JSON ({exc})"]) from None
        return cls.from_dict(raw, check_paths)

    def to_dict(self) -> dict:
        d = {"dataset": self.dataset, "split": self.split, "model": self.model,
             "train": self.train.to_dict(), "seeds": self.seeds, "jobs": self.jobs}
        if self.out is not None:
            d["out"] = self.out
        return d

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _check_dataset(ds: dict, check_paths: bool) -> list[str]:
    errors = []
    kind = ds["kind"]
    if kind == "blobs":
        ds.setdefault("std", 0.3)
        ds.setdefault("radius", 2.0)
        ds.setdefault("seed", 0)
        try:
            BlobSpec(ds.get("m", 0), ds.get("counts", ()), ds["std"], ds["radius"], ds["seed"])
        except (ValueError, TypeError) as exc:
            errors.append(f"dataset: {exc}")
    elif kind == "idx":
        ds.setdefault("m", 10)
        for k in ("train_images", "train_labels", "test_images", "test_labels"):
            if k not in ds:
                errors.append(f"dataset.{k}: required for IDX datasets")
            elif check_paths and not Path(ds[k]).exists():
                errors.append(f"dataset.{k}: file not found: {ds[k]}")
    else:
        ds.setdefault("label_column", "label")
        ds.setdefault("m", None)
        if "path" not in ds:
            errors.append("dataset.path: required for CSV datasets")
        elif check_paths and not Path(ds["path"]).exists():
            errors.append(f"dataset.path: file not found: {ds['path']}")
    return errors


def build_splits(cfg: ExperimentConfig) -> tuple[Dataset, Dataset, Dataset]:
    ds, sp = cfg.dataset, cfg.split
    if ds["kind"] == "idx":
        full = load_idx(ds["train_images"], ds["train_labels"], ds["m"])
        test = load_idx(ds["test_images"], ds["test_labels"], ds["m"], split="test")
        v = sp["val_fraction"]
        # the held-out test file is kept intact; a validation part is carved from training data
        tr, va = partition(full, (1 - v, v), sp["seed"], sp["stratified"], ("train", "validation"))
        return tr, va, test
    if ds["kind"] == "blobs":
        data = make_blobs(BlobSpec(ds["m"], ds["counts"], ds["std"], ds["radius"], ds["seed"]))
    else:
        data = load_csv(ds["path"], ds["label_column"], ds["m"])
    return split(data, sp["fractions"], sp["seed"], sp["stratified"])


def seeded(tc: TrainConfig, seed: int) -> TrainConfig:
    """Copy of ``tc`` whose initialization, shuffling and threshold draws use ``seed``."""
    tc = copy.deepcopy(tc)
    tc.seed = seed
    tc.multisol.seed = seed
    return tc


def run_one(cfg: ExperimentConfig, tc: TrainConfig, seed: int, splits=None) -> tuple[TrainReport, MlpModel]:
    tr, va, te = build_splits(cfg) if splits is None else splits
    tc = seeded(tc, seed)
    model = MlpModel.for_task(tr.d, tr.m, cfg.model["hidden"], seed=seed)
    return train(model, tr, va, te, tc), model


def _job(args):
    cfg, tc, seed, tag = args
    report, model = run_one(cfg, tc, seed)
    return tag, seed, report, model


def run_many(cfg: ExperimentConfig, jobs: list[tuple[TrainConfig, object]], jobs_n: int = 1):
    """Train every ``(train config, tag)`` for every seed; results sorted by (job order, seed)."""
    tasks = [(cfg, tc, s, (k, tag)) for k, (tc, tag) in enumerate(jobs) for s in cfg.seeds]
    if jobs_n > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs_n) as pool:
            results = list(pool.map(_job, tasks))
    else:
        results = [_job(t) for t in tasks]
    results.sort(key=lambda r: (r[0][0], r[1]))
    return [(tag, seed, rep, model) for (_, tag), seed, rep, model in results]


class ResultsTable:
    """Per-run rows keyed by (loss, sweep value, seed) with aggregate statistics."""

    def __init__(self, axis: str = ""):
        self.axis = axis
        self.rows: list[dict] = []

    def add(self, loss: str, value, seed: int, report: TrainReport):
        row = {"loss": loss, "value": "" if value is None else value, "seed": seed}
        row.update({k: report.test_metrics[k] for k in METRICS})
        row["convergence_epoch"] = report.convergence_epoch
        row["best_epoch"] = report.best_epoch
        row["seconds"] = report.seconds
        self.rows.append(row)

    def groups(self):
        out = {}
        for r in self.rows:
            out.setdefault((r["loss"], r["value"]), []).append(r)
        return out

    def aggregate(self, columns=METRICS + ("convergence_epoch",)) -> list[dict]:
        agg = []
        for (loss, value), rows in self.groups().items():
            for col in columns:
                v = np.array([r[col] for r in rows], dtype=np.float64)
                agg.append({"loss": loss, "value": value, "metric": col, "n": v.size,
                            "mean": v.mean(), "std": v.std(ddof=1) if v.size > 1 else 0.0,
                            "min": v.min(), "max": v.max(), "range": v.max() - v.min(), "median": float(np.median(v))})
        return agg

    def column(self, loss: str, value, col: str) -> np.ndarray:
        return np.array([r[col] for r in self.groups()[(loss, value)]], dtype=np.float64)

    def write(self, path):
        _write_csv(path, self.rows)

    def write_aggregate(self, path):
        _write_csv(path, self.aggregate())


def _write_csv(path, rows: list[dict]):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        if not rows:
            return
        wr = csv.DictWriter(fh, fieldnames=list(rows[0]))
        wr.writeheader()
        for r in rows:
            wr.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})
    return path


def read_csv_rows(path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
