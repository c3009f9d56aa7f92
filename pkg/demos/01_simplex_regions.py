"""Classifying points of the probability simplex with a threshold.

A threshold tau is itself a point of the simplex. Class j wins at z when
z_j - z_k > tau_j - tau_k for every other class k. At the barycenter this is
the familiar argmax rule; elsewhere the decision regions shift.
"""

import numpy as np

from multisol import argmax_rule, barycenter, classify, in_region, vertex
from multisol.simplex import classify_array

z = (0.2, 0.5, 0.3)
print("z =", z)
print("  at the barycenter:     ", classify(z, barycenter(3)))
print("  at tau=(1/8, 3/4, 1/8):", classify(z, (1 / 8, 3 / 4, 1 / 8)))

# A point where two entries tie belongs to no open region.
tie = (0.4, 0.4, 0.2)
print("\nregions containing", tie, [j for j in range(3) if in_region(tie, barycenter(3), j)])
print("tie-broken decision:", classify(tie, barycenter(3)), "argmax rule:", argmax_rule(tie))

# Vertices always land in their own region for interior thresholds.
tau = np.array([0.5, 0.3, 0.2])
print("\nvertex decisions at", tau, [classify(vertex(j, 3), tau).label for j in range(3)])

# Sweep the threshold from the barycenter toward vertex 2 and watch the
# share of random points assigned to class 2 shrink.
rng = np.random.default_rng(0)
pts = rng.dirichlet(np.ones(3), 20_000)
for t in (0.0, 0.2, 0.4, 0.6):
    tau = barycenter(3).values + t * (vertex(2, 3).values - barycenter(3).values)
    labels, _ = classify_array(pts, tau)
    print(f"t={t:.1f}  tau={np.round(tau, 3)}  class shares={np.bincount(labels, minlength=3) / len(pts)}")
