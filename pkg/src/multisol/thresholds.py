"""A-posteriori threshold search over a barycentric grid and heatmap export."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .confusion import confusions_from_labels
from .dirichlet import DirichletPrior, log_pdf
from .scores import ScoreKind, macro_score
from .simplex import classify_array

TOP1 = "top1"


def _compositions(k: int, m: int):
    """All non-negative integer m-tuples summing to k, in lexicographic order."""
    if m == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in _compositions(k - first, m - 1):
            yield (first, *rest)


@dataclass(frozen=True, eq=False)
class BarycentricGrid:
    k: int
    points: np.ndarray

    @classmethod
    def build(cls, k: int, m: int) -> "BarycentricGrid":
        """Points ``(i_1/k, ..., i_m/k)``; ``k = 0`` gives the barycenter alone."""
        if k < 0 or m < 2:
            raise ValueError(f"need k >= 0 and m >= 2, got k={k}, m={m}")
        if k == 0:
            pts = np.full((1, m), 1.0 / m)
        else:
            pts = np.array(list(_compositions(k, m)), dtype=np.float64) / k
        return cls(k, pts)

    @property
    def m(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    @staticmethod
    def size(k: int, m: int) -> int:
        return 1 if k == 0 else math.comb(k + m - 1, m - 1)


@dataclass
class ThresholdScanResult:
    grid: BarycentricGrid
    scores: np.ndarray
    best_index: int
    metric: str

    @property
    def best_threshold(self) -> np.ndarray:
        return self.grid.points[self.best_index]

    @property
    def best_score(self) -> float:
        return float(self.scores[self.best_index])


def metric_value(metric, pred_labels, labels, m: int) -> float:
    if metric == TOP1:
        return float(np.mean(np.asarray(pred_labels) == np.asarray(labels)))
    return macro_score(metric, confusions_from_labels(pred_labels, labels, m))


def scan(preds, labels, grid: BarycentricGrid, metric=TOP1) -> ThresholdScanResult:
    """Hard-classify at every grid threshold and score; ties go to the earliest grid point."""
    preds = np.asarray(preds, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if preds.ndim != 2 or preds.shape[0] == 0:
        raise ValueError("scan needs a non-empty (n, m) batch of predictions")
    if preds.shape[1] != grid.m:
        raise ValueError(f"dimension mismatch: predictions m={preds.shape[1]}, grid m={grid.m}")
    metric = metric if metric == TOP1 else ScoreKind.parse(metric).value
    m = grid.m
    scores = np.empty(len(grid))
    step = max(1, (1 << 20) // (preds.shape[0] * m * m))
    for lo in range(0, len(grid), step):
        taus = grid.points[lo : lo + step]
        pred_labels, _ = classify_array(preds[None, :, :], taus[:, None, :])
        for g, row in enumerate(pred_labels):
            scores[lo + g] = metric_value(metric, row, labels, m)
    return ThresholdScanResult(grid, scores, int(np.argmax(scores)), metric)


def near_optimal_centroid(result: ThresholdScanResult, rel_tol: float = 0.01) -> np.ndarray:
    """Score-weighted mean of grid thresholds scoring within ``rel_tol`` of the best."""
    keep = result.scores >= result.best_score * (1 - rel_tol)
    w = result.scores[keep]
    pts = result.grid.points[keep]
    if w.sum() <= 0:
        return pts.mean(axis=0)
    return (w[:, None] * pts).sum(axis=0) / w.sum()


def heatmap_export(result: ThresholdScanResult, path, prior: DirichletPrior | None = None):
    """Write ``tau_1..tau_m,score[,log_pdf]`` rows, one per grid point."""
    m = result.grid.m
    if prior is not None and prior.m != m:
        raise ValueError(f"prior has m={prior.m}, grid has m={m}")
    header = [f"tau_{i + 1}" for i in range(m)] + ["score"] + (["log_pdf"] if prior is not None else [])
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for tau, s in zip(result.grid.points, result.scores):
            row = [repr(float(t)) for t in tau] + [repr(float(s))]
            if prior is not None:
                try:
                    row.append(repr(log_pdf(prior, tau)))
                except ValueError:
                    # alpha_i < 1 on a boundary grid point: the density diverges there
                    row.append("inf")
            wr.writerow(row)
    return path


def read_heatmap(path) -> tuple[list[str], np.ndarray]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(c) for c in r] for r in rows[1:]])
