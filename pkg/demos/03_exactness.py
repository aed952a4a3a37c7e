"""
Probing exactness
=================

A doubly stochastic operator is exact when every density relaxes to the
uniform one. Here the L1 distance and the entropies tell the same story
for three operators: a mixing kernel, a block average and a swap.
"""

# %%
import uentropy as ue

space = ue.uniform_space(8)
utilities = [ue.log_utility(), ue.isoelastic_utility(0.5)]
operators = [
    ue.mixing_operator(0.3, space),
    ue.conditional_expectation([[0, 1, 2, 3], [4, 5, 6, 7]], space),
    ue.permutation_operator([1, 0, 2, 3, 4, 5, 6, 7], space),
]

# %%
for p in operators:
    v = ue.exactness_probe(p, horizon=60, threshold=1e-6, utilities=utilities)
    print(f"{p.descriptor:28s} {v.classification:17s} max final L1 = {v.evidence['max_final_l1']:.2e}")

# %%
# Side by side: L1 distance, entropy and the entropy bound along one run.
f = ue.point_density(space, 0)
rep = ue.equivalence_report(ue.mixing_operator(0.3, space), f, ue.isoelastic_utility(0.5), 30)
print(f"{'n':>3} {'L1':>10} {'H':>10} {'bound':>10} {'||f||_2':>10}")
for r in rep.rows[::5]:
    print(f"{r['step']:3d} {r['l1']:10.3e} {r['h_value']:10.3e} {r['h_bound']:10.3e} {r['norm_alpha']:10.6f}")
print("trends:", rep.l1_trend, rep.entropy_trend)
