"""Choosing a threshold after training, and exporting a ternary heatmap.

The scan evaluates every point of a barycentric grid as a threshold and keeps
the best one. The CSV it writes has one row per grid point with the score and,
optionally, the log density of the prior used in training.
"""

import tempfile
from pathlib import Path

import numpy as np

from multisol import DirichletPrior
from multisol.datasets import BlobSpec, make_blobs, split
from multisol.losses import LossConfig
from multisol.nn import MlpModel, TrainConfig, train
from multisol.thresholds import BarycentricGrid, heatmap_export, near_optimal_centroid, read_heatmap, scan

data = make_blobs(BlobSpec(3, (600, 200, 100), std=1.2, seed=0))
tr, va, te = split(data, seed=0)
model = MlpModel.for_task(2, 3, seed=0)
train(model, tr, va, te, TrainConfig("multisol", LossConfig("accuracy", alpha=5), lr=1e-3, max_epochs=60, patience=10))

probs = model.predict(te.features)
grid = BarycentricGrid.build(30, 3)
for metric in ("top1", "f1", "recall"):
    res = scan(probs, te.labels, grid, metric)
    print(f"{metric:6s}  barycenter {scan(probs, te.labels, BarycentricGrid.build(0, 3), metric).best_score:.4f}  "
          f"best {res.best_score:.4f} at tau={np.round(res.best_threshold, 3)}")

res = scan(probs, te.labels, grid)
print("centroid of near-optimal thresholds:", np.round(near_optimal_centroid(res), 3))
out = Path(tempfile.mkdtemp()) / "heatmap.csv"
heatmap_export(res, out, DirichletPrior.symmetric(5, 3))
header, rows = read_heatmap(out)
print(f"wrote {len(rows)} rows to {out} with columns {header}")
