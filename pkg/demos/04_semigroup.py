"""
Continuous time
===============

A continuous-time chain that jumps at rate 1 to a fresh uniform draw
forgets its starting density at rate exp(-t). The entropies decay with it.
"""

# %%
import numpy as np

import uentropy as ue

space = ue.make_space([0.1, 0.2, 0.3, 0.4])
f = ue.normalize([4.0, 1.0, 0.5, 0.25], space)
sg = ue.make_semigroup(ue.mixing_operator(1.0, space), rate=1.0)

times = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0]
traj = ue.semigroup_evolve(sg, f, times, [ue.log_utility(), ue.isoelastic_utility(-1.0)])

# %%
l0 = traj.l1[0]
for t, l1, h in zip(times, traj.l1, traj.entropy("log")):
    print(f"t={t:4.1f}  L1={l1:.6e}  exp(-t) L1(0)={np.exp(-t) * l0:.6e}  H_log={h:.6e}")

# %%
# A rougher base kernel relaxes too, with no closed form to compare to.
sg = ue.make_semigroup(ue.sinkhorn_random(space, seed=5), rate=2.0)
traj = ue.semigroup_evolve(sg, f, times, [ue.log_utility()])
print("entropy along a random semigroup:", np.round(traj.entropy("log"), 8))
