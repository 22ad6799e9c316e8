# %% [markdown]
# # When the relaxation is not tight
#
# A cycle of repulsive couplings cannot satisfy every edge. The LP relaxation
# then prefers fractional marginals, and rounding them is ambiguous. Branching
# on the most uncertain variable recovers the exact MAP.

# %%
import numpy as np

from ad3.bench import gen_frustrated_cycle
from ad3.graph import brute_force_map
from ad3.solvers import run_ad3, branch_and_bound

graph = gen_frustrated_cycle(seed=3, length=5)
root = run_ad3(graph)
print("root status:", root.status, " fractional:", root.fractional)
print("root marginals p(y=1):", np.round([p[1] for p in root.p], 3))
print(f"root dual bound {root.best_dual:.4f}, best rounded value {root.best_primal_value:.4f}")

# %%
result = branch_and_bound(graph)
print("branch-and-bound:", result.assignment, f"value {result.value:.6f}, nodes {result.nodes}")
print("enumeration:     ", brute_force_map(graph).assignment)

# %% [markdown]
# Trees are the other extreme: the relaxation is tight, so the root node
# already closes the search.

# %%
from ad3.bench import gen_tree

tree = gen_tree(4)
print("tree nodes explored:", branch_and_bound(tree).nodes)
