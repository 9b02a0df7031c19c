"""The boundary-law map G = 2F as a dynamical system in the plane (q = 3)."""
import numpy as np

from pottstree.dynamics import basin_predict, field_sample, find_all_fixed_points, iterate, on_line
from pottstree.model import ModelParams

for theta in (3.9, 4.0, 4.5):
    params = ModelParams(q=3, theta=theta)
    print(f"theta={theta}")
    for fp in find_all_fixed_points(params):
        print(f"  {fp.descriptor.label():28s} {np.round(fp.location, 5)}  {fp.stability}")

# basins on the invariant line I_1
params = ModelParams(q=3, theta=4.5)
for x in (-2.0, -0.1, 0.1, 2.0):
    res = iterate(params, on_line(3, 1, x))
    print(f"start {x:+.1f} -> {np.round(res.limit, 6)} after {res.n_iter} steps;"
          f" predicted {basin_predict(params, 1, x).label()}")

# coarse field: which fixed point each grid start ends at
sample = field_sample(params, lo=-3, hi=3, n=7, n_steps=5000)
grid = np.array(sample.limit_id, dtype=object).reshape(7, 7)
print("limit ids (rows: v2 from -3 to 3, columns: v1):")
print(grid[::-1])
