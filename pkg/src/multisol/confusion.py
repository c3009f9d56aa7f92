"""One-vs-rest confusion matrices, hard and Monte Carlo smoothed.

For a prediction ``p`` and thresholds ``tau_1..tau_N`` the smoothed probability
that ``p`` falls in the region of class ``j`` is

    M[j] = 1/N * sum_r prod_{k != j} sigmoid(lam * (p[j] - p[k] - tau_r[j] + tau_r[k]))

and the soft confusion matrix of class ``j`` sums ``M[:, j]`` (or its
complement) over the samples of each true class.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .autodiff import Tensor, as_tensor
from .dirichlet import ThresholdSet
from .simplex import as_point, classify_array, region_mask

CLAMP = 500.0
_CHUNK_ELEMS = 1 << 20


@dataclass(frozen=True)
class HardConfusion:
    tn: int
    fp: int
    fn: int
    tp: int

    @property
    def total(self):
        return self.tn + self.fp + self.fn + self.tp


@dataclass(frozen=True)
class SoftConfusion:
    tn: float
    fp: float
    fn: float
    tp: float

    @property
    def total(self):
        return self.tn + self.fp + self.fn + self.tp


def _as_batch(preds) -> np.ndarray:
    if isinstance(preds, np.ndarray):
        p = preds.astype(np.float64, copy=False)
    else:
        p = np.array([np.asarray(z, dtype=np.float64) for z in preds])
    if p.ndim != 2 or p.shape[0] == 0:
        raise ValueError("predictions must be a non-empty (n, m) batch")
    return p


def _as_labels(labels, n: int, m: int) -> np.ndarray:
    y = np.asarray(labels).astype(np.int64).reshape(-1)
    if y.size != n:
        raise ValueError(f"got {y.size} labels for {n} predictions")
    if np.any((y < 0) | (y >= m)):
        raise ValueError(f"labels must lie in [0, {m})")
    return y


def _taus(thresholds) -> np.ndarray:
    if isinstance(thresholds, ThresholdSet):
        return thresholds.samples
    t = np.asarray(thresholds, dtype=np.float64)
    return t[None, :] if t.ndim == 1 else t


def _chunks(n: int, N: int, m: int):
    step = max(1, _CHUNK_ELEMS // max(1, n * m * m))
    for lo in range(0, N, step):
        yield slice(lo, min(N, lo + step))


def hard_confusions(preds, labels, tau) -> list[HardConfusion]:
    """One-vs-rest counts for each class at a single threshold, ties broken as in ``classify``."""
    p = _as_batch(preds)
    tau = np.asarray(as_point(tau))
    if tau.size != p.shape[1]:
        raise ValueError(f"dimension mismatch: predictions m={p.shape[1]}, threshold m={tau.size}")
    y = _as_labels(labels, *p.shape)
    pred_lab, _ = classify_array(p, tau)
    return confusions_from_labels(pred_lab, y, p.shape[1])


def confusions_from_labels(pred_labels, labels, m: int) -> list[HardConfusion]:
    pred_labels = np.asarray(pred_labels)
    labels = np.asarray(labels)
    n = labels.size
    out = []
    for j in range(m):
        pos, hit = labels == j, pred_labels == j
        tp = int(np.sum(pos & hit))
        fp = int(np.sum(~pos & hit))
        fn = int(np.sum(pos & ~hit))
        out.append(HardConfusion(tn=n - tp - fp - fn, fp=fp, fn=fn, tp=tp))
    return out


# ---------------------------------------------------------------------------
# smoothed membership


def _pair_diffs(x: np.ndarray) -> np.ndarray:
    return x[..., :, None] - x[..., None, :]


@numba.njit(cache=True)
def _membership_kernel(dp, dt, lam, jacobian, acc, w):
    n, m = dp.shape[0], dp.shape[1]
    N = dt.shape[0]
    sig = np.empty((m, m))
    comp = np.empty((m, m))
    for i in range(n):
        for r in range(N):
            for j in range(m):
                sig[j, j] = 1.0
                comp[j, j] = 0.0
                for k in range(j + 1, m):
                    raw = lam * (dp[i, j, k] - dt[r, j, k])
                    x = min(max(raw, -CLAMP), CLAMP)
                    e = np.exp(-x)
                    up = 1.0 / (1.0 + e)
                    lo = e * up
                    sig[j, k] = up
                    sig[k, j] = lo
                    live = abs(raw) <= CLAMP
                    # d/dx log sigmoid(x) = sigmoid(-x)
                    comp[j, k] = lo if live else 0.0
                    comp[k, j] = up if live else 0.0
            for j in range(m):
                prod = 1.0
                for k in range(m):
                    prod *= sig[j, k]
                acc[i, j] += prod
                if jacobian:
                    for k in range(m):
                        w[i, j, k] += prod * comp[j, k]


def _membership_pass(p: np.ndarray, taus: np.ndarray, lam: float, jacobian: bool):
    """Smoothed memberships ``(n, m)`` and optionally their Jacobian ``(n, m, m)``.

    ``jac[i, j, a]`` is the derivative of membership ``j`` of sample ``i`` with
    respect to ``p[i, a]``; caching it makes the backward pass a contraction.
    Thresholds are summed in their stored order.
    """
    n, m = p.shape
    N = taus.shape[0]
    acc = np.zeros((n, m))
    w = np.zeros((n, m, m) if jacobian else (1, 1, 1))
    _membership_kernel(
        np.ascontiguousarray(_pair_diffs(p)), np.ascontiguousarray(_pair_diffs(taus)), float(lam), jacobian, acc, w
    )
    acc /= N
    if not jacobian:
        return acc, None
    w *= lam / N
    # the margin of pair (j, k) grows with p[j] and shrinks with p[k]
    jac = -w
    idx = np.arange(m)
    jac[:, idx, idx] += w.sum(axis=2)
    return acc, jac


def _membership_reference(p: np.ndarray, taus: np.ndarray, lam: float) -> np.ndarray:
    """Direct vectorized evaluation of the smoothed membership, used to cross-check the kernel."""
    n, m = p.shape
    N = taus.shape[0]
    dp = _pair_diffs(p)[:, None]
    dt = _pair_diffs(taus)
    diag = np.eye(m, dtype=bool)
    acc = np.zeros((n, m))
    for sl in _chunks(n, N, m):
        x = np.clip(lam * (dp - dt[sl][None]), -CLAMP, CLAMP)
        sig = 1.0 / (1.0 + np.exp(-x))
        sig[..., diag] = 1.0
        acc += sig.prod(axis=-1).sum(axis=1)
    return acc / N


def smoothed_memberships(preds, thresholds, lam: float) -> np.ndarray:
    """``(n, m)`` array of smoothed region probabilities for a batch of predictions."""
    if not lam > 0:
        raise ValueError(f"steepness must be positive, got {lam}")
    return _membership_pass(_as_batch(preds), _taus(thresholds), float(lam), False)[0]


def smoothed_membership(pred, thresholds, lam: float) -> np.ndarray:
    return smoothed_memberships(np.asarray(as_point(pred))[None, :], thresholds, lam)[0]


def membership(preds: Tensor, thresholds, lam: float) -> Tensor:
    """Tape-recorded smoothed membership; gradients flow to ``preds`` only."""
    if not lam > 0:
        raise ValueError(f"steepness must be positive, got {lam}")
    preds = as_tensor(preds)
    p, taus, lam = preds.value, _taus(thresholds), float(lam)
    if p.ndim != 2 or p.shape[1] != taus.shape[1]:
        raise ValueError(f"predictions {p.shape} do not match thresholds with m={taus.shape[1]}")
    out, jac = _membership_pass(p, taus, lam, preds.requires_grad)
    return Tensor.from_op(out, [(preds, lambda g: np.einsum("ij,ija->ia", g, jac))])


def mc_hard_memberships(preds, thresholds) -> np.ndarray:
    """Fraction of thresholds whose open region ``j`` contains each prediction."""
    p = _as_batch(preds)
    taus = _taus(thresholds)
    n, m = p.shape
    acc = np.zeros((n, m))
    for sl in _chunks(n, taus.shape[0], m):
        acc += region_mask(p[:, None, :], taus[sl][None]).sum(axis=1)
    return acc / taus.shape[0]


def mc_hard_membership(pred, thresholds) -> np.ndarray:
    return mc_hard_memberships(np.asarray(as_point(pred))[None, :], thresholds)[0]


# ---------------------------------------------------------------------------
# soft confusion matrices


def confusion_entries(memb, labels, m: int):
    """Per-class ``(tn, fp, fn, tp)`` vectors from an ``(n, m)`` membership array or Tensor.

    FN and TN are the complements of TP and FP within each true-class group,
    so every class matrix sums to ``n``.
    """
    y = np.asarray(labels).astype(np.int64)
    onehot = np.eye(m)[y]
    count = onehot.sum(axis=0)
    n = y.size
    tp = (memb * onehot).sum(axis=0)
    fp = (memb * (1.0 - onehot)).sum(axis=0)
    fn = count - tp
    tn = (n - count) - fp
    return tn, fp, fn, tp


def soft_confusions(preds, labels, thresholds, lam: float) -> list[SoftConfusion]:
    p = _as_batch(preds)
    y = _as_labels(labels, *p.shape)
    memb = smoothed_memberships(p, thresholds, lam)
    return _pack(confusion_entries(memb, y, p.shape[1]))


def soft_confusions_from_membership(memb, labels) -> list[SoftConfusion]:
    memb = np.asarray(memb, dtype=np.float64)
    y = _as_labels(labels, *memb.shape)
    return _pack(confusion_entries(memb, y, memb.shape[1]))


def _pack(entries) -> list[SoftConfusion]:
    tn, fp, fn, tp = (np.asarray(e, dtype=np.float64) for e in entries)
    return [SoftConfusion(float(a), float(b), float(c), float(d)) for a, b, c, d in zip(tn, fp, fn, tp)]
