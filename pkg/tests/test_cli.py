import json
import subprocess
import sys

import numpy as np
import pytest

from multisol.cli import main
from multisol.experiments import ConfigError, ExperimentConfig, read_csv_rows
from multisol.nn import MlpModel
from multisol.thresholds import read_heatmap

METRIC_FIELDS = {"accuracy", "macro_accuracy", "macro_precision", "macro_recall", "macro_f1"}


def write_config(tmp_path, m=3, counts=None, **train):
    cfg = {
        "dataset": {"kind": "blobs", "m": m, "counts": counts or [40] * m, "std": 0.3, "seed": 0},
        "split": {"fractions": [0.6, 0.2, 0.2]},
        "model": {"hidden": [8]},
        "train": {"max_epochs": 3, "lr": 1e-2, "batch_size": 32, "multisol": {"n_thresholds": 32}, **train},
        "seeds": [0],
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


class TestTrain:
    def test_report_schema(self, tmp_path):
        cfg = write_config(tmp_path)
        assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
        report = json.loads((tmp_path / "out" / "seed0" / "report.json").read_text())
        assert set(report) >= {"loss", "history", "best_epoch", "convergence_epoch", "test_metrics", "seconds"}
        assert set(report["test_metrics"]) == METRIC_FIELDS
        assert report["history"][0]["epoch"] == 0
        assert MlpModel.load(tmp_path / "out" / "seed0" / "model.ckpt").sizes == (2, 8, 3)
        assert (tmp_path / "out" / "config.effective.json").exists()

    def test_missing_dataset_path(self, tmp_path, capsys):
        missing = tmp_path / "nowhere" / "train-images-idx3-ubyte"
        cfg = {"dataset": {"kind": "idx", "train_images": str(missing), "train_labels": str(missing),
                           "test_images": str(missing), "test_labels": str(missing)}}
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        assert main(["train", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
        err = capsys.readouterr().err
        assert str(missing) in err
        assert "t10k-labels-idx1-ubyte" in err

    def test_every_bad_field_listed(self, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"dataset": {"kind": "blobs", "m": 3, "counts": [5, 5, 5]},
                                    "split": {"fractions": [0.5, 0.5, 0.5]}, "seeds": [], "bogus": 1,
                                    "train": {"lr": -1}}))
        assert main(["train", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
        err = capsys.readouterr().err
        for needle in ("split.fractions", "seeds", "bogus", "lr"):
            assert needle in err

    def test_seed_range(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "out"
        assert main(["train", "--config", str(cfg), "--out", str(out), "--seeds", "0..4"]) == 0
        assert sorted(p.name for p in out.glob("seed*")) == [f"seed{s}" for s in range(5)]
        assert len(read_csv_rows(out / "runs.csv")) == 5
        agg = read_csv_rows(out / "aggregate.csv")
        acc = next(r for r in agg if r["metric"] == "accuracy")
        assert int(acc["n"]) == 5
        vals = [float(r["accuracy"]) for r in read_csv_rows(out / "runs.csv")]
        assert float(acc["mean"]) == pytest.approx(np.mean(vals))
        assert float(acc["range"]) == pytest.approx(max(vals) - min(vals))

    def test_effective_config_rerun(self, tmp_path):
        cfg = write_config(tmp_path)
        assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
        echoed = tmp_path / "a" / "config.effective.json"
        assert main(["train", "--config", str(echoed), "--out", str(tmp_path / "b")]) == 0
        assert (tmp_path / "b" / "config.effective.json").read_text() == echoed.read_text().replace(str(tmp_path / "a"), str(tmp_path / "b"))
        a = json.loads((tmp_path / "a" / "seed0" / "report.json").read_text())
        b = json.loads((tmp_path / "b" / "seed0" / "report.json").read_text())
        a.pop("seconds"), b.pop("seconds")
        assert a == b

    def test_missing_config(self, tmp_path, capsys):
        assert main(["train", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2
        assert "nope.json" in capsys.readouterr().err

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "multisol", "train", "--config", str(tmp_path / "x.json"), "--out", str(tmp_path)],
                              capture_output=True, text=True)
        assert proc.returncode == 2


class TestSweep:
    def test_alpha_rows(self, tmp_path):
        cfg = write_config(tmp_path, max_epochs=2)
        out = tmp_path / "out"
        assert main(["sweep", "--config", str(cfg), "--out", str(out), "--axis", "alpha", "--values", "1,2.5,5,7.5,10,20,50"]) == 0
        rows = read_csv_rows(out / "sweep_table.csv")
        assert [float(r["alpha"]) for r in rows] == [1, 2.5, 5, 7.5, 10, 20, 50]
        assert set(rows[0]) == {"alpha", "multisol_macro_f1", "multisol_accuracy", "ce_macro_f1", "ce_accuracy"}
        assert len({r["ce_accuracy"] for r in rows}) == 1

    def test_lambda_rows(self, tmp_path):
        cfg = write_config(tmp_path, max_epochs=1)
        out = tmp_path / "out"
        values = "1000,500,250,100,50,20,10,1,0.5,0.25"
        assert main(["sweep", "--config", str(cfg), "--out", str(out), "--axis", "lambda", "--values", values]) == 0
        assert len(read_csv_rows(out / "sweep_table.csv")) == 10

    @pytest.mark.parametrize("args", [["--axis", "alpha", "--values", ""], ["--axis", "beta", "--values", "1"], ["--axis", "alpha", "--values", "1,-2"]])
    def test_bad_sweep(self, tmp_path, args):
        cfg = write_config(tmp_path)
        assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o"), *args]) == 2


class TestScores:
    def run(self, tmp_path, name):
        cfg = write_config(tmp_path, m=3, counts=[60, 20, 10], max_epochs=2)
        out = tmp_path / name
        assert main(["scores", "--config", str(cfg), "--out", str(out), "--seeds", "0,1"]) == 0
        return out

    def test_table_and_determinism(self, tmp_path):
        a = self.run(tmp_path, "a")
        rows = read_csv_rows(a / "scores_table.csv")
        assert [r["loss"] for r in rows] == ["ce", "weighted_ce", "squared", "multisol_accuracy",
                                             "multisol_precision", "multisol_recall", "multisol_f1"]
        for r in rows:
            for col in ("accuracy", "macro_precision", "macro_recall", "macro_f1"):
                mean, rng = r[col].split(" ")
                lo, hi = rng.strip("()").split("-")
                assert float(lo) <= float(mean) <= float(hi)
            assert float(r["seconds"]) > 0
        b = self.run(tmp_path, "b")
        strip = lambda rows: [{k: v for k, v in r.items() if k != "seconds"} for r in rows]
        assert strip(read_csv_rows(b / "scores_table.csv")) == strip(rows)
        assert strip(read_csv_rows(b / "scores_runs.csv")) == strip(read_csv_rows(a / "scores_runs.csv"))


class TestHeatmap:
    @pytest.fixture()
    def trained(self, tmp_path):
        cfg = write_config(tmp_path)
        assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "run")]) == 0
        return cfg, tmp_path / "run" / "seed0" / "model.ckpt"

    def test_k60(self, tmp_path, trained):
        cfg, ckpt = trained
        out = tmp_path / "hm"
        assert main(["heatmap", "--config", str(cfg), "--checkpoint", str(ckpt), "--out", str(out), "--grid-k", "60", "--alpha", "10"]) == 0
        header, rows = read_heatmap(out / "heatmap.csv")
        assert header == ["tau_1", "tau_2", "tau_3", "score", "log_pdf"]
        assert rows.shape == (1891, 5)

    def test_k0_equals_argmax(self, tmp_path, trained):
        cfg, ckpt = trained
        out = tmp_path / "hm"
        assert main(["heatmap", "--config", str(cfg), "--checkpoint", str(ckpt), "--out", str(out), "--grid-k", "0"]) == 0
        _, rows = read_heatmap(out / "heatmap.csv")
        assert rows.shape[0] == 1
        report = json.loads((tmp_path / "run" / "seed0" / "report.json").read_text())
        assert rows[0, 3] == report["test_metrics"]["accuracy"]

    def test_m10_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, m=10, counts=[10] * 10)
        MlpModel.for_task(2, 10, hidden=(8,)).save(tmp_path / "m10.ckpt")
        assert main(["heatmap", "--config", str(cfg), "--checkpoint", str(tmp_path / "m10.ckpt"), "--out", str(tmp_path / "hm")]) == 2
        assert "m=3" in capsys.readouterr().err

    def test_missing_checkpoint(self, tmp_path):
        cfg = write_config(tmp_path)
        assert main(["heatmap", "--config", str(cfg), "--checkpoint", str(tmp_path / "none.ckpt")]) == 2


class TestConfig:
    def test_defaults_resolved(self):
        cfg = ExperimentConfig.from_dict({"dataset": {"kind": "blobs", "m": 2, "counts": [5, 5]}})
        d = cfg.to_dict()
        assert d["split"] == {"fractions": [0.8, 0.1, 0.1], "stratified": True, "seed": 0, "val_fraction": 0.1}
        assert d["train"]["multisol"]["lambda"] == 10.0 and d["model"]["hidden"] == [128, 64]
        assert ExperimentConfig.from_dict(d).to_dict() == d

    def test_unknown_dataset_key(self):
        with pytest.raises(ConfigError) as exc:
            ExperimentConfig.from_dict({"dataset": {"kind": "blobs", "m": 2, "counts": [5, 5], "colour": 1}})
        assert any("colour" in e for e in exc.value.errors)
