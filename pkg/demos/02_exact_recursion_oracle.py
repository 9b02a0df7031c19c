"""Finite-volume marginals: tree recursion against brute-force enumeration."""
import numpy as np

from pottstree.exactrec import brute_force_distribution, cylinder_table, root_marginal
from pottstree.model import ROOT, Configuration, ModelParams, ball, sphere

rng = np.random.default_rng(0)
params = ModelParams(q=3, J=0.9)
outer = sphere(params, 3)
omega = Configuration(3, dict(zip(outer, rng.integers(1, 4, len(outer)).tolist())))

table = brute_force_distribution(params, 2, omega)  # 3^10 colorings
print("states enumerated:", table.n_states)
print("root marginal, recursion:  ", root_marginal(params, 2, omega))
print("root marginal, enumeration:", table.marginal(ROOT))

cyl = cylinder_table(params, 2, omega, 1)
brute = table.cylinder_masses(ball(params, 1))
worst = max(abs(cyl[c] - brute[c]) / brute[c] for c in cyl)
print(f"{len(cyl)} cylinders on V_1, worst relative gap {worst:.2e}")

# the recursion alone goes far deeper than enumeration ever could
deep = Configuration.constant(3, sphere(params, 16), 1)
print("root marginal at n=15, boundary all 1:", root_marginal(params, 15, deep))
