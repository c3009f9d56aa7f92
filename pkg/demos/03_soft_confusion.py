"""Differentiable confusion matrices.

The hard region indicator is replaced by a product of sigmoids with steepness
lambda. Averaging over sampled thresholds gives a soft membership per class,
and summing memberships over a batch gives one-vs-rest confusion entries.
"""

import numpy as np

from multisol import DirichletPrior, mc_hard_memberships, sample_thresholds, smoothed_memberships, soft_confusions

rng = np.random.default_rng(1)
preds = rng.dirichlet(np.ones(3), 6)
labels = np.array([0, 1, 2, 0, 1, 2])
ts = sample_thresholds(DirichletPrior.symmetric(1, 3), 1024, seed=0)

hard = mc_hard_memberships(preds, ts)
for lam in (1.0, 10.0, 100.0, 1000.0):
    soft = smoothed_memberships(preds, ts, lam)
    print(f"lambda={lam:7.1f}  max |soft - hard| = {np.abs(soft - hard).max():.4f}")

print("\nsoft confusion matrices at lambda=10:")
for j, cm in enumerate(soft_confusions(preds, labels, ts, 10.0)):
    print(f"  class {j}: tp={cm.tp:.3f} fp={cm.fp:.3f} fn={cm.fn:.3f} tn={cm.tn:.3f} total={cm.total:.3f}")
