"""The four figure-style boundary rules: measured child counts and limits.

Only the fig7 rule gives the same child counts at every vertex; the others
are recorded as observations.
"""
import numpy as np

from pottstree import bcond
from pottstree.model import ModelParams
from pottstree.tisgm import theta_crit

for name, m in (("fig5", 2), ("fig6", 3), ("fig7", 2), ("fig8", 4)):
    rule = bcond.figure_rule(name)
    q = rule.q
    cv = bcond.measure_c_values(ModelParams(q=q, J=1.0), rule, 5)
    print(f"{name}: q={q} strict={cv.strict} diagonal={cv.diagonal_values()}")
    for theta in (theta_crit(q, m), q + 2.0):
        params = ModelParams(q=q, theta=theta)
        for n in (200, 2000):
            res = bcond.empirical_classify(params, rule, n_max=n)
            label = res.descriptor.label() if res.resolved else "unresolved"
            print(f"   theta={theta:8.5f} n={n:4d}: {label:26s} last step {res.trajectory.successive_diff():.1e}")
