"""The MultiSOL loss and its gradient.

MultiSOL is minus the macro average of a score (accuracy, precision, recall
or F1) computed on the soft confusion matrices. It is differentiable in the
predictions, so it can train a network directly for the score of interest.
"""

import numpy as np

from multisol import LossConfig, cross_entropy, multisol, multisol_grad, squared_loss
from multisol.autodiff import numerical_grad

rng = np.random.default_rng(2)
labels = rng.integers(0, 3, 12)
good = 0.8 * np.eye(3)[labels] + 0.2 / 3
bad = rng.dirichlet(np.ones(3), 12)

for kind in ("accuracy", "precision", "recall", "f1"):
    cfg = LossConfig(kind, n_thresholds=512, lam=10)
    print(f"{kind:9s}  good preds {multisol(good, labels, cfg).value:+.4f}   random preds {multisol(bad, labels, cfg).value:+.4f}")
print(f"cross-entropy  good {cross_entropy(good, labels).value:.4f}  random {cross_entropy(bad, labels).value:.4f}")
print(f"squared loss   good {squared_loss(good, labels).value:.4f}  random {squared_loss(bad, labels).value:.4f}")

cfg = LossConfig("f1", n_thresholds=256, lam=10)
ts = cfg.thresholds(3)
g = multisol_grad(bad, labels, cfg, ts)
fd = numerical_grad(lambda p: multisol(p, labels, cfg, ts).value, bad)
print(f"\nF1 gradient vs finite differences: relative error {np.linalg.norm(g - fd) / np.linalg.norm(fd):.2e}")
