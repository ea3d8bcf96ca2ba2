# %% [markdown]
# # Lifespan against data size
#
# Data eps * u0 with u0 a Gaussian. For small eps the lifespan should grow like
# eps^{-1/(alpha_max - n/2)}: eps^-2 for u_t - u_xx = u^2 on the line.
# Each run also gets the explicit upper bound T0 built from the test function.

# %%
import math

import numpy as np

from lifespan_lab.campaign import eps_grid, simulate_config, weighted_slope
from lifespan_lab.config import parse_config

cfg = parse_config("""
[system]
p = 2
n = 1
[data]
amplitude = 1
width = 1
[run]
horizon = 1e9
""")

# %%
rows = []
for eps in eps_grid(10**-2.5, 10**-0.5, 6):
    report, bound, witness = simulate_config(cfg, eps)
    rows.append((eps, report.blowup.T_num, bound.T0, witness.holds, report.steps))
    print(f"eps={eps:.4f}  T_num={report.blowup.T_num:12.2f}  T0={bound.T0:14.1f}  "
          f"inequality={'holds' if witness.holds else 'violated'}  steps={report.steps}")

# %% [markdown]
# Slope of log T against log eps, with half weight on the two end points.

# %%
x = np.log([r[0] for r in rows])
y = np.log([r[1] for r in rows])
w = np.where((x == x.min()) | (x == x.max()), 0.5, 1.0)
slope, _, half = weighted_slope(x, y, w)
print(f"fitted slope {slope:.3f} +/- {half:.3f}  (predicted -2)")

# %% [markdown]
# The upper bound is far from sharp but it is an honest bound.

# %%
print("largest T_num / T0:", max(r[1] / r[2] for r in rows))
print("local slopes:", np.round(np.diff(y) / np.diff(x), 3))
assert math.isclose(slope, -2, abs_tol=0.3)
