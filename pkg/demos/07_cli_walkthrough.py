"""Driving the command line from a script.

Writes a small JSON experiment config and runs the four subcommands. The same
calls work from a shell as `multisol train --config cfg.json --out run`.
"""

import json
import tempfile
from pathlib import Path

from multisol.cli import main

work = Path(tempfile.mkdtemp())
config = {
    "dataset": {"kind": "blobs", "m": 3, "counts": [300, 100, 50], "std": 1.0, "seed": 0},
    "split": {"fractions": [0.6, 0.2, 0.2], "stratified": True, "seed": 0},
    "model": {"hidden": [32, 16]},
    "train": {"lr": 1e-3, "max_epochs": 20, "patience": 5, "multisol": {"score": "f1", "n_thresholds": 256}},
    "seeds": [0, 1],
}
cfg = work / "cfg.json"
cfg.write_text(json.dumps(config, indent=2))

for argv in (
    ["train", "--config", str(cfg), "--out", str(work / "train")],
    ["sweep", "--config", str(cfg), "--out", str(work / "sweep"), "--axis", "lambda", "--values", "1,10,100"],
    ["scores", "--config", str(cfg), "--out", str(work / "scores"), "--seeds", "0"],
    ["heatmap", "--config", str(cfg), "--checkpoint", str(work / "train" / "seed0" / "model.ckpt"),
     "--out", str(work / "heatmap"), "--grid-k", "20", "--alpha", "5"],
):
    print("multisol", " ".join(argv[:1]), "->", "exit", main(argv))

print("\nscores table:")
print((work / "scores" / "scores_table.csv").read_text())
print("sweep table:")
print((work / "sweep" / "sweep_table.csv").read_text())
print("outputs in", work)
