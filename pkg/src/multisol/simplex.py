"""Points of the probability simplex and the natural threshold classification rule.

A threshold ``tau`` on the simplex assigns a point ``z`` to class ``j`` when

    z[j] - z[k] > tau[j] - tau[k]   for every k != j.

At the barycenter ``tau = (1/m, ..., 1/m)`` this is the argmax rule. Points on
region boundaries belong to no open region; :func:`classify` resolves them by
maximizing ``z[j] - tau[j]`` with the lowest index winning residual ties.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

SUM_ATOL = 1e-9
RENORM_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class SimplexPoint:
    """A probability vector with ``m >= 2`` entries."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).reshape(-1)
        if v.size < 2:
            raise ValueError(f"simplex point needs at least 2 entries, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise ValueError("simplex point has non-finite entries")
        if np.any(v < 0) or np.any(v > 1):
            raise ValueError(f"simplex entries must lie in [0, 1]: {v}")
        total = v.sum()
        if abs(total - 1.0) > RENORM_TOL:
            raise ValueError(f"entries sum to {total!r}, not 1")
        if abs(total - 1.0) > SUM_ATOL:
            v = v / total
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return self.m

    def __getitem__(self, j):
        return self.values[j]

    def __eq__(self, other):
        if not isinstance(other, SimplexPoint):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())

    def __repr__(self):
        return f"SimplexPoint({np.array2string(self.values, precision=6, separator=', ')})"


class ClassDecision(NamedTuple):
    label: int
    on_boundary: bool


def as_point(z) -> SimplexPoint:
    return z if isinstance(z, SimplexPoint) else SimplexPoint(z)


def vertex(j: int, m: int) -> SimplexPoint:
    """One-hot vertex ``e_j`` of the (m-1)-simplex."""
    if m < 2:
        raise ValueError(f"class count must be >= 2, got {m}")
    if not 0 <= j < m:
        raise ValueError(f"class index {j} out of range for m={m}")
    v = np.zeros(m)
    v[j] = 1.0
    return SimplexPoint(v)


def barycenter(m: int) -> SimplexPoint:
    return SimplexPoint(np.full(m, 1.0 / m))


def _check_pair(z: np.ndarray, tau: np.ndarray):
    if z.shape[-1] != tau.shape[-1]:
        raise ValueError(f"dimension mismatch: point has m={z.shape[-1]}, threshold has m={tau.shape[-1]}")


def margin_matrix(z, tau) -> np.ndarray:
    """Pairwise margins ``(z[j] - z[k]) - (tau[j] - tau[k])``.

    Broadcasts over leading axes of ``z`` and ``tau``; the last two axes of the
    result are ``(j, k)``. Antisymmetric bit for bit, so at most one row can be
    strictly positive off the diagonal.
    """
    z = np.asarray(z, dtype=np.float64)
    tau = np.asarray(tau, dtype=np.float64)
    _check_pair(z, tau)
    dz = z[..., :, None] - z[..., None, :]
    dt = tau[..., :, None] - tau[..., None, :]
    return dz - dt


def region_mask(z, tau) -> np.ndarray:
    """Boolean ``(..., m)`` array: entry j is True iff z lies in the open region of class j."""
    d = margin_matrix(z, tau)
    m = d.shape[-1]
    off = ~np.eye(m, dtype=bool)
    return np.all((d > 0) | ~off, axis=-1)


def in_region(z, tau, j: int) -> bool:
    z, tau = as_point(z), as_point(tau)
    _check_pair(z.values, tau.values)
    if not 0 <= j < z.m:
        raise ValueError(f"class index {j} out of range for m={z.m}")
    return bool(region_mask(z.values, tau.values)[j])


def classify_array(z, tau) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`classify` for a ``(n, m)`` batch.

    ``tau`` may be a single ``(m,)`` threshold or a stack broadcastable
    against ``z``. Returns integer labels and the boundary flags.
    """
    z = np.asarray(z, dtype=np.float64)
    tau = np.asarray(tau, dtype=np.float64)
    mask = region_mask(z, tau)
    inside = mask.any(axis=-1)
    labels = np.where(inside, np.argmax(mask, axis=-1), np.argmax(z - tau, axis=-1))
    return labels, ~inside


def classify(z, tau) -> ClassDecision:
    z, tau = as_point(z), as_point(tau)
    labels, boundary = classify_array(z.values, tau.values)
    return ClassDecision(int(labels), bool(boundary))


def argmax_rule(z) -> ClassDecision:
    z = as_point(z)
    return classify(z, barycenter(z.m))
