"""A ReLU multilayer perceptron with softmax output, Adam, and early-stopped training."""

from __future__ import annotations

import json
import logging
import struct
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .autodiff import Tensor
from .confusion import confusions_from_labels
from .datasets import Dataset
from .dirichlet import ThresholdSet, make_rng
from .losses import ClassWeights, LossConfig, cross_entropy_tensor, multisol_tensor, squared_loss_tensor
from .scores import macro_score
from .simplex import classify_array

log = logging.getLogger(__name__)

LOSSES = ("multisol", "ce", "weighted_ce", "squared")
CHECKPOINT_MAGIC = b"MSOLMLP\x00"
CHECKPOINT_VERSION = 1


class MlpModel:
    """Dense layers ``sizes[0] -> ... -> sizes[-1]``, ReLU between them, softmax on top."""

    def __init__(self, sizes, seed: int = 0, weights=None):
        self.sizes = tuple(int(s) for s in sizes)
        if len(self.sizes) < 2 or min(self.sizes) < 1:
            raise ValueError(f"invalid layer sizes {self.sizes}")
        if weights is None:
            rng = make_rng(seed)
            weights = []
            for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
                bound = np.sqrt(6.0 / fan_in)  # Kaiming uniform, ReLU gain
                weights.append((rng.uniform(-bound, bound, (fan_in, fan_out)), np.zeros(fan_out)))
        self.params = []
        for (w, b), fan_in, fan_out in zip(weights, self.sizes[:-1], self.sizes[1:]):
            w, b = np.array(w, dtype=np.float64), np.array(b, dtype=np.float64).reshape(-1)
            if w.shape != (fan_in, fan_out) or b.shape != (fan_out,):
                raise ValueError(f"layer shapes {w.shape}, {b.shape} do not match sizes {fan_in}->{fan_out}")
            self.params += [Tensor(w, requires_grad=True), Tensor(b, requires_grad=True)]

    @classmethod
    def for_task(cls, d: int, m: int, hidden=(128, 64), seed: int = 0) -> "MlpModel":
        return cls((d, *hidden, m), seed=seed)

    @property
    def m(self) -> int:
        return self.sizes[-1]

    def layers(self):
        return list(zip(self.params[0::2], self.params[1::2]))

    def logits(self, x) -> Tensor:
        h = Tensor(np.asarray(x, dtype=np.float64))
        if h.ndim != 2 or h.shape[1] != self.sizes[0]:
            raise ValueError(f"input of shape {h.shape} does not match model input width {self.sizes[0]}")
        layers = self.layers()
        for k, (w, b) in enumerate(layers):
            h = h @ w + b
            if k < len(layers) - 1:
                h = h.relu()
        return h

    def forward(self, x) -> Tensor:
        return self.logits(x).softmax(axis=1)

    def predict(self, x, batch_size: int = 4096) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return np.concatenate([self.forward(x[i : i + batch_size]).value for i in range(0, len(x), batch_size)])

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def state(self) -> list[np.ndarray]:
        return [p.value.copy() for p in self.params]

    def load_state(self, state):
        for p, v in zip(self.params, state):
            p.value = v.copy()

    def save(self, path):
        """Binary checkpoint: magic, version, layer sizes, then little-endian float64 weights and biases."""
        with open(path, "wb") as fh:
            fh.write(CHECKPOINT_MAGIC)
            fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(self.sizes)))
            fh.write(struct.pack(f"<{len(self.sizes)}I", *self.sizes))
            for p in self.params:
                fh.write(p.value.astype("<f8").tobytes())

    @classmethod
    def load(cls, path) -> "MlpModel":
        raw = Path(path).read_bytes()
        if raw[:8] != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a model checkpoint (magic {raw[:8]!r})")
        version, nsizes = struct.unpack("<II", raw[8:16])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        sizes = struct.unpack(f"<{nsizes}I", raw[16 : 16 + 4 * nsizes])
        off = 16 + 4 * nsizes
        weights = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            w = np.frombuffer(raw, "<f8", fan_in * fan_out, off).reshape(fan_in, fan_out)
            off += 8 * fan_in * fan_out
            b = np.frombuffer(raw, "<f8", fan_out, off)
            off += 8 * fan_out
            weights.append((w, b))
        if off != len(raw):
            raise ValueError(f"{path}: checkpoint size mismatch ({len(raw)} bytes, expected {off})")
        return cls(sizes, weights=weights)


def forward(model: MlpModel, x) -> np.ndarray:
    """Row-wise softmax outputs of ``model`` for a batch."""
    return model.predict(x)


class Adam:
    def __init__(self, params, lr=1e-4, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params)
        self.lr, self.eps = lr, eps
        self.b1, self.b2 = betas
        self.t = 0
        self.mom = [np.zeros_like(p.value) for p in self.params]
        self.vel = [np.zeros_like(p.value) for p in self.params]

    def step(self):
        self.t += 1
        c1 = 1 - self.b1**self.t
        c2 = 1 - self.b2**self.t
        for p, mo, ve in zip(self.params, self.mom, self.vel):
            if p.grad is None:
                continue
            g = p.grad
            mo *= self.b1
            mo += (1 - self.b1) * g
            ve *= self.b2
            ve += (1 - self.b2) * g * g
            p.value = p.value - self.lr * (mo / c1) / (np.sqrt(ve / c2) + self.eps)


@dataclass
class TrainConfig:
    loss: str = "multisol"
    multisol: LossConfig = field(default_factory=LossConfig)
    lr: float = 1e-4
    batch_size: int = 128
    max_epochs: int = 500
    patience: int = 25
    weight_decay: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.multisol, dict):
            self.multisol = LossConfig.from_dict(self.multisol)
        errors = []
        if self.loss not in LOSSES:
            errors.append(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if not self.lr > 0:
            errors.append(f"lr must be positive, got {self.lr}")
        if self.batch_size < 1:
            errors.append(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            errors.append(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.patience < 1:
            errors.append(f"patience must be >= 1, got {self.patience}")
        if self.weight_decay < 0:
            errors.append(f"weight_decay must be >= 0, got {self.weight_decay}")
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def label(self) -> str:
        return f"multisol_{self.multisol.score.value}" if self.loss == "multisol" else self.loss

    def to_dict(self) -> dict:
        d = asdict(self)
        d["multisol"] = self.multisol.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class TrainReport:
    loss: str
    history: list = field(default_factory=list)
    best_epoch: int = 0
    convergence_epoch: int = 0
    test_metrics: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")


def evaluate(probs, labels) -> dict:
    """Argmax-rule metrics: top-1 accuracy plus macro one-vs-rest scores."""
    probs = np.asarray(probs)
    labels = np.asarray(labels)
    m = probs.shape[1]
    pred, _ = classify_array(probs, np.full(m, 1.0 / m))
    cms = confusions_from_labels(pred, labels, m)
    return {
        "accuracy": float(np.mean(pred == labels)),
        "macro_accuracy": macro_score("accuracy", cms),
        "macro_precision": macro_score("precision", cms),
        "macro_recall": macro_score("recall", cms),
        "macro_f1": macro_score("f1", cms),
    }


def make_loss_fn(cfg: TrainConfig, m: int, train_labels) -> Callable[[Tensor, np.ndarray], Tensor]:
    """Scalar tape loss of ``(probs, labels)`` for the configured selector."""
    if cfg.loss == "multisol":
        lc = cfg.multisol
        thresholds: ThresholdSet = lc.thresholds(m)
        return lambda p, y: multisol_tensor(p, y, lc.score, thresholds, lc.lam)[0]
    if cfg.loss == "ce":
        return lambda p, y: cross_entropy_tensor(p, y)
    if cfg.loss == "weighted_ce":
        weights = ClassWeights.balanced(train_labels, m)
        return lambda p, y: cross_entropy_tensor(p, y, weights)
    return lambda p, y: squared_loss_tensor(p, y)


def _l2(model: MlpModel) -> Tensor:
    total = None
    for w, _ in model.layers():
        term = w.square().sum()
        total = term if total is None else total + term
    return total * 0.5


def loss_and_grads(model: MlpModel, x, y, loss_fn, weight_decay: float = 0.0):
    """Run forward and backward once; returns the scalar loss and one gradient per parameter."""
    model.zero_grad()
    loss = loss_fn(model.forward(x), y)
    if weight_decay > 0:
        loss = loss + _l2(model) * weight_decay
    loss.backward()
    return float(loss.value), [p.grad for p in model.params]


def batched_loss(model: MlpModel, data: Dataset, loss_fn, batch_size: int) -> float:
    """Mean of batchwise losses over ``data`` in its stored order."""
    losses = []
    for i in range(0, len(data), batch_size):
        p = model.forward(data.features[i : i + batch_size])
        losses.append(float(loss_fn(p, data.labels[i : i + batch_size]).value))
    return float(np.mean(losses))


def train(model: MlpModel, train_set: Dataset, val_set: Dataset, test_set: Dataset, cfg: TrainConfig) -> TrainReport:
    """Adam with early stopping on validation loss; the best checkpoint is restored and tested."""
    for name, part in (("train", train_set), ("validation", val_set), ("test", test_set)):
        if len(part) == 0:
            raise ValueError(f"{name} split is empty")
    m = model.m
    t0 = time.perf_counter()
    loss_fn = make_loss_fn(cfg, m, train_set.labels)
    opt = Adam(model.params, lr=cfg.lr)
    rng = make_rng(cfg.seed)
    report = TrainReport(loss=cfg.label)

    def record(epoch, train_loss):
        val_loss = batched_loss(model, val_set, loss_fn, cfg.batch_size)
        if not np.isfinite(val_loss):
            raise FloatingPointError(f"validation loss is {val_loss} at epoch {epoch} ({cfg.label})")
        metrics = evaluate(model.predict(val_set.features), val_set.labels)
        report.history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss,
                               "val_accuracy": metrics["accuracy"], "val_macro_f1": metrics["macro_f1"]})
        return val_loss

    best = record(0, batched_loss(model, train_set, loss_fn, cfg.batch_size))
    best_state, best_epoch = model.state(), 0
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(train_set))
        batch_losses = []
        for i in range(0, len(order), cfg.batch_size):
            idx = order[i : i + cfg.batch_size]
            value, _ = loss_and_grads(model, train_set.features[idx], train_set.labels[idx], loss_fn, cfg.weight_decay)
            if not np.isfinite(value):
                raise FloatingPointError(f"training loss is {value} at epoch {epoch}, batch {i // cfg.batch_size} ({cfg.label})")
            opt.step()
            batch_losses.append(value)
        val_loss = record(epoch, float(np.mean(batch_losses)))
        if val_loss < best:
            best, best_state, best_epoch = val_loss, model.state(), epoch
        elif epoch - best_epoch >= cfg.patience:
            break
    log.debug("%s: stopped at epoch %d, best epoch %d", cfg.label, epoch, best_epoch)
    model.load_state(best_state)
    report.best_epoch = best_epoch
    report.convergence_epoch = epoch
    report.test_metrics = evaluate(model.predict(test_set.features), test_set.labels)
    report.seconds = time.perf_counter() - t0
    return report
