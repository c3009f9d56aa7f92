"""Random thresholds from a Dirichlet prior and Monte Carlo region memberships.

Instead of fixing one threshold, the loss averages over thresholds drawn from
Dir(alpha). The Hoeffding rule says how many draws keep the Monte Carlo
membership estimate within eps of its expectation with probability 1 - delta.
"""

import numpy as np

from multisol import DirichletPrior, hoeffding_samples, mc_hard_membership, sample_thresholds

for alpha in (1.0, 5.0, 20.0):
    prior = DirichletPrior.symmetric(alpha, 3)
    ts = sample_thresholds(prior, 50_000, seed=0)
    print(f"alpha={alpha:5.1f}  sample mean={np.round(ts.samples.mean(0), 4)}  "
          f"sample var={ts.samples.var(0)[0]:.5f}  exact var={prior.variance()[0]:.5f}")

for eps, delta in [(0.1, 0.1), (0.05, 0.05), (0.01, 0.01)]:
    print(f"eps={eps}, delta={delta}: N = {hoeffding_samples(eps, delta)}")

# Two classes with a uniform prior: the first coordinate of tau is uniform on
# [0, 1], so the prediction (0.7, 0.3) lands in class 0 with probability 0.7.
n = hoeffding_samples(0.05, 0.05)
prior = DirichletPrior.symmetric(1, 2)
est = np.array([mc_hard_membership((0.7, 0.3), sample_thresholds(prior, n, seed))[0] for seed in range(200)])
print(f"\nN={n}: estimates of 0.7 have mean {est.mean():.4f}, "
      f"{np.mean(np.abs(est - 0.7) < 0.05):.1%} within 0.05")
