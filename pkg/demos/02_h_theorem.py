"""
Entropy never increases
=======================

Evolve a density under a random doubly stochastic kernel and watch every
u-entropy fall, while a permutation of the atoms keeps them all fixed.
"""

# %%
import numpy as np

import uentropy as ue

rng = np.random.default_rng(3)
space = ue.uniform_space(6)
f = ue.random_density(space, rng)
utilities = [ue.log_utility(), ue.isoelastic_utility(0.5), ue.isoelastic_utility(-2.0)]

# %%
p = ue.sinkhorn_random(space, seed=11)
traj = ue.evolve(p, f, 12, utilities)
print(" ".join(f"{h:>18s}" for h in traj.header()))
for row in traj.rows():
    print(" ".join(f"{c:>18s}" for c in row))

report = ue.h_theorem_check(traj)
print("monotone:", report.passed, "largest rise:", report.max_increase)

# %%
# An invertible operator only relabels atoms, so entropies stay put.
sigma = rng.permutation(space.n)
traj = ue.evolve(ue.permutation_operator(sigma, space), f, 12, utilities)
for u in traj.utilities:
    h = traj.entropy(u)
    print(f"{u:18s} spread over 12 steps = {np.ptp(h):.1e}")
