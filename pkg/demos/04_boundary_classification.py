"""Which measure a periodic boundary condition selects, predicted and observed."""
import numpy as np

from pottstree import bcond
from pottstree.model import ModelParams
from pottstree.tisgm import theta_crit

params = ModelParams(q=3, theta=4.5)
for c in ((2, 0, 0), (0, 1, 1), (0, 2, 0)):
    prof = bcond.SuccessorProfile(c)
    pred = bcond.classify_boundary(params, prof)
    emp = bcond.empirical_classify(params, prof.rule())
    print(c, "->", pred.label(), "| recursion:", emp.descriptor.label() if emp.resolved else "unresolved",
          np.round(emp.limit, 6))

# near theta_1 convergence is slow; the recursion needs depth to settle
q, m = 3, 1
theta = theta_crit(q, m)
params = ModelParams(q=q, theta=theta)
prof = bcond.SuccessorProfile((2, 0, 0))
target = bcond.classify_boundary(params, prof)
for n in (200, 2000, 20000):
    emp = bcond.empirical_classify(params, prof.rule(), n_max=n, check_homogeneity=False)
    gap = np.max(np.abs(emp.limit - target.vector(q)))
    print(f"theta_1, n={n:5d}: distance to {target.label()} = {gap:.2e}")

# the qm condition and the special temperature theta*
for q, m in ((5, 1), (17, 1), (55, 2)):
    print(q, m, bcond.qm_condition(q, m), "theta* =", bcond.solve_theta_star(q, m))
