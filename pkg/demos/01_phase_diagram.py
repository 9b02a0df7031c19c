"""How many translation-invariant splitting Gibbs measures exist at each theta.

Counts jump at theta_m = 1 + 2 sqrt(m (q - m)) and drop at theta = q + 1.
"""
import math

import numpy as np

from pottstree.tisgm import count_tisgms, enumerate_tisgms, regime_label, theta_crit

q = 3
print("q=3 critical values:", [round(theta_crit(q, 1), 6), q + 1])

for theta in (3.5, 1 + 2 * math.sqrt(2), 3.9, 4.0, 4.5):
    print(f"theta={theta:.6f}  count={count_tisgms(q, theta)}  regime={regime_label(q, theta)}")

# larger q: the count climbs a ladder, one step per class size m
q = 6
for theta in np.linspace(2.0, 9.0, 15):
    rep = enumerate_tisgms(q, theta)
    print(f"q=6 theta={theta:5.2f} count={rep.count:3d} {rep.regime}")

# every enumerated descriptor, spelled out
for d in enumerate_tisgms(3, 4.5).descriptors:
    print(d.label(), "h =", round(d.h, 6))
