"""The multiclass score-oriented loss and the baseline losses it is compared with.

All loss functions accept either arrays or tape tensors for ``preds``. The
``*_tensor`` variants return a scalar :class:`~multisol.autodiff.Tensor` for
training; the plain variants return a :class:`LossValue`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .autodiff import Tensor, as_tensor
from .confusion import confusion_entries, mc_hard_memberships, membership
from .dirichlet import DirichletPrior, ThresholdSet, sample_thresholds
from .scores import ScoreKind, score_terms

PROB_FLOOR = 1e-12


@dataclass
class LossConfig:
    score: ScoreKind = ScoreKind.ACCURACY
    alpha: float = 1.0
    n_thresholds: int = 1024
    lam: float = 10.0
    seed: int = 0

    def __post_init__(self):
        self.score = ScoreKind.parse(self.score)
        errors = []
        if not self.alpha > 0:
            errors.append(f"alpha must be positive, got {self.alpha}")
        if int(self.n_thresholds) != self.n_thresholds or self.n_thresholds < 1:
            errors.append(f"n_thresholds must be a positive integer, got {self.n_thresholds}")
        if not self.lam > 0:
            errors.append(f"lambda must be positive, got {self.lam}")
        if errors:
            raise ValueError("; ".join(errors))
        self.n_thresholds = int(self.n_thresholds)

    def prior(self, m: int) -> DirichletPrior:
        return DirichletPrior.symmetric(self.alpha, m)

    def thresholds(self, m: int) -> ThresholdSet:
        """Sampled once per run and reused for every batch."""
        return sample_thresholds(self.prior(m), self.n_thresholds, self.seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["score"] = self.score.value
        d["lambda"] = d.pop("lam")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LossConfig":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        unknown = set(d) - {"score", "alpha", "n_thresholds", "lam", "seed"}
        if unknown:
            raise ValueError(f"unknown loss config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class LossValue:
    value: float
    per_class_scores: np.ndarray | None = field(default=None)


@dataclass(frozen=True)
class ClassWeights:
    w: np.ndarray

    @classmethod
    def balanced(cls, labels, m: int) -> "ClassWeights":
        """``n / (m * n_j)``, the usual balanced weighting."""
        counts = np.bincount(np.asarray(labels, dtype=np.int64), minlength=m).astype(np.float64)
        if np.any(counts == 0):
            raise ValueError(f"balanced weights need every class present; counts={counts.astype(int).tolist()}")
        return cls(counts.sum() / (m * counts))


def _check(preds, labels):
    p = as_tensor(preds)
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    if p.ndim != 2 or p.shape[0] == 0:
        raise ValueError("loss needs a non-empty (n, m) batch of predictions")
    if y.size != p.shape[0]:
        raise ValueError(f"got {y.size} labels for {p.shape[0]} predictions")
    if np.any((y < 0) | (y >= p.shape[1])):
        raise ValueError(f"labels must lie in [0, {p.shape[1]})")
    return p, y


def multisol_tensor(preds, labels, score, thresholds: ThresholdSet, lam: float) -> tuple[Tensor, Tensor]:
    """Return ``(loss, per_class_scores)`` as tape tensors."""
    p, y = _check(preds, labels)
    if thresholds.m != p.shape[1]:
        raise ValueError(f"thresholds have m={thresholds.m}, predictions m={p.shape[1]}")
    memb = membership(p, thresholds, lam)
    tn, fp, fn, tp = confusion_entries(memb, y, p.shape[1])
    per_class = score_terms(score, tn, fp, fn, tp)
    return -per_class.mean(), per_class


def multisol(preds, labels, cfg: LossConfig, thresholds: ThresholdSet | None = None) -> LossValue:
    m = as_tensor(preds).shape[-1]
    thresholds = cfg.thresholds(m) if thresholds is None else thresholds
    loss, per_class = multisol_tensor(preds, labels, cfg.score, thresholds, cfg.lam)
    return LossValue(float(loss.value), per_class.value.copy())


def multisol_hard(preds, labels, score, thresholds: ThresholdSet) -> LossValue:
    """MultiSOL with exact region indicators in place of the sigmoid products (the infinite-steepness limit)."""
    p, y = _check(preds, labels)
    memb = mc_hard_memberships(p.value, thresholds)
    per_class = score_terms(score, *confusion_entries(memb, y, p.shape[1]))
    return LossValue(float(-per_class.mean()), per_class)


def multisol_grad(preds, labels, cfg: LossConfig, thresholds: ThresholdSet | None = None) -> np.ndarray:
    """Exact gradient of :func:`multisol` with respect to every prediction entry."""
    p = Tensor(np.asarray(preds, dtype=np.float64), requires_grad=True)
    thresholds = cfg.thresholds(p.shape[1]) if thresholds is None else thresholds
    loss, _ = multisol_tensor(p, labels, cfg.score, thresholds, cfg.lam)
    loss.backward()
    return p.grad


def cross_entropy_tensor(preds, labels, weights: ClassWeights | None = None) -> Tensor:
    p, y = _check(preds, labels)
    onehot = np.eye(p.shape[1])[y]
    w = np.ones(y.size) if weights is None else np.asarray(weights.w)[y]
    picked = (p.clip_min(PROB_FLOOR).log() * onehot).sum(axis=1)
    return -(picked * w).mean()


def cross_entropy(preds, labels, weights: ClassWeights | None = None) -> LossValue:
    return LossValue(float(cross_entropy_tensor(preds, labels, weights).value))


def squared_loss_tensor(preds, labels) -> Tensor:
    p, y = _check(preds, labels)
    return (p - np.eye(p.shape[1])[y]).square().sum(axis=1).mean()


def squared_loss(preds, labels) -> LossValue:
    return LossValue(float(squared_loss_tensor(preds, labels).value))
