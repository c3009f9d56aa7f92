"""Dirichlet priors over simplex thresholds and Monte Carlo sample sizing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import gammaln, xlogy

from .simplex import SimplexPoint, as_point


@dataclass(frozen=True, eq=False)
class DirichletPrior:
    alpha: np.ndarray

    def __post_init__(self):
        a = np.array(self.alpha, dtype=np.float64).reshape(-1)
        if a.size < 2:
            raise ValueError("Dirichlet prior needs at least 2 concentration parameters")
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise ValueError(f"concentration parameters must be positive: {a}")
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)

    @classmethod
    def symmetric(cls, alpha: float, m: int) -> "DirichletPrior":
        return cls(np.full(m, float(alpha)))

    @property
    def m(self) -> int:
        return self.alpha.size

    def mean(self) -> np.ndarray:
        return self.alpha / self.alpha.sum()

    def variance(self) -> np.ndarray:
        a0 = self.alpha.sum()
        return self.alpha * (a0 - self.alpha) / (a0**2 * (a0 + 1))


@dataclass(frozen=True, eq=False)
class ThresholdSet:
    """Thresholds drawn once from a prior; rows of ``samples`` are simplex points."""

    samples: np.ndarray
    seed: int | None = None
    prior: DirichletPrior | None = field(default=None)

    def __post_init__(self):
        s = np.array(self.samples, dtype=np.float64)
        if s.ndim != 2 or s.shape[0] < 1 or s.shape[1] < 2:
            raise ValueError(f"threshold samples must be an (N, m) array with N >= 1, m >= 2; got {s.shape}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def m(self) -> int:
        return self.samples.shape[1]

    def points(self) -> list[SimplexPoint]:
        return [SimplexPoint(row) for row in self.samples]

    def save(self, path):
        """Write one threshold per row as comma-separated text (repr precision)."""
        path = Path(path)
        with path.open("w", encoding="utf-8") as fh:
            if self.seed is not None:
                fh.write(f"# seed={self.seed}\n")
            if self.prior is not None:
                fh.write("# alpha=" + ",".join(repr(float(a)) for a in self.prior.alpha) + "\n")
            for row in self.samples:
                fh.write(",".join(repr(float(x)) for x in row) + "\n")

    @classmethod
    def load(cls, path) -> "ThresholdSet":
        seed, prior, rows = None, None, []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            if line.startswith("# seed="):
                seed = int(line[len("# seed="):])
            elif line.startswith("# alpha="):
                prior = DirichletPrior([float(x) for x in line[len("# alpha="):].split(",")])
            elif not line.startswith("#"):
                rows.append([float(x) for x in line.split(",")])
        return cls(np.array(rows), seed=seed, prior=prior)


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator; the seed is passed through ``SeedSequence``."""
    return np.random.Generator(np.random.PCG64(seed))


def sample_thresholds(prior: DirichletPrior, n: int, seed: int = 0) -> ThresholdSet:
    """Draw ``n`` thresholds by normalizing independent Gamma(alpha_i, 1) variates."""
    if n < 1:
        raise ValueError(f"need at least one threshold sample, got n={n}")
    rng = make_rng(seed)
    g = rng.standard_gamma(prior.alpha, size=(n, prior.m))
    # all-zero rows only occur for tiny alpha; resample them
    bad = g.sum(axis=1) == 0
    while np.any(bad):
        g[bad] = rng.standard_gamma(prior.alpha, size=(int(bad.sum()), prior.m))
        bad = g.sum(axis=1) == 0
    return ThresholdSet(g / g.sum(axis=1, keepdims=True), seed=seed, prior=prior)


def hoeffding_samples(epsilon: float, delta: float) -> int:
    """Smallest N with ``2 exp(-2 N eps^2) <= delta``."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return math.ceil(math.log(2.0 / delta) / (2.0 * epsilon**2))


def log_pdf(prior: DirichletPrior, z) -> float:
    """Log Dirichlet density w.r.t. Lebesgue measure on the first m-1 coordinates.

    Returns ``-inf`` on the boundary when the density vanishes there and raises
    when it diverges (some ``alpha_i < 1`` with ``z_i = 0``).
    """
    z = as_point(z).values
    a = prior.alpha
    if z.size != a.size:
        raise ValueError(f"dimension mismatch: point has m={z.size}, prior has m={a.size}")
    zero = z == 0
    if np.any(zero & (a < 1)):
        raise ValueError("Dirichlet density diverges at this boundary point")
    if np.any(zero & (a > 1)):
        return float("-inf")
    log_norm = gammaln(a.sum()) - gammaln(a).sum()
    return float(log_norm + xlogy(a - 1, z).sum())


def log_pdf_array(prior: DirichletPrior, z: np.ndarray) -> np.ndarray:
    """Row-wise :func:`log_pdf` for an ``(n, m)`` array."""
    return np.array([log_pdf(prior, row) for row in np.asarray(z)])
