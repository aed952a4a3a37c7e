"""
Entropy of a single density
===========================

Compute the utility-maximizing entropy of one density on a two-atom space
under three utilities, and compare against the Shannon and Renyi closed
forms and the brute-force oracle.
"""

# %%
import numpy as np

import uentropy as ue

space = ue.uniform_space(2)
f = ue.make_density([1.5, 0.5], space)

# %%
# The log utility gives back the Shannon entropy and leaves the density
# unchanged as the optimizer. Isoelastic utilities give Renyi entropies.
for u in (ue.log_utility(), ue.isoelastic_utility(0.5), ue.isoelastic_utility(-1.0)):
    r = ue.n_u(f, u)
    print(f"{u.name:18s} N={r.n_value:+.10f} H={r.h_value:.10f} Lambda={r.multiplier:.10f}")
    print(f"{'':18s} optimizer={np.round(r.optimizer.values, 6)} dual gap={r.dual_check:.1e}")

print("Shannon      ", ue.shannon_entropy(f))
print("Renyi a=2    ", ue.renyi_entropy(f, 2.0))
print("Renyi a=1/2  ", ue.renyi_entropy(f, 0.5))

# %%
# An independent grid search over all densities agrees closely.
for u in (ue.log_utility(), ue.isoelastic_utility(-1.0)):
    print(u.name, "oracle", ue.oracle_n_u(f, u, 2000), "solver", ue.n_u(f, u).n_value)

# %%
# Rescaling and shifting a utility changes N but not H.
u = ue.isoelastic_utility(0.5)
for a, b in [(1, 0), (3, -2), (0.2, 7)]:
    r = ue.n_u(f, ue.affine_utility(u, a, b))
    print(f"a={a:<4} b={b:<3} N={r.n_value:+.6f} H={r.h_value:.12f}")

# %%
# Upper bounds: ln max f and the bound linear in the L1 distance.
print("ln max f            ", ue.bound_linf(f))
print("linear bound on N   ", ue.quantitative_bound(f, ue.log_utility()))
print("Pinsker gap         ", ue.pinsker_gap(f))
