# %% [markdown]
# # Fibonacci chain: finite sums approaching their limits
#
# The Fibonacci model set lives in R, lifted to a lattice in R^2 whose
# internal coordinate decides membership.  We generate a patch, then watch
# the normalized exponential sums a_R(t) settle onto dens(L) * 1^_W(-t*).

# %%
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from modelset_fb import convergence_sweep, model_set_points, preset

OUT = Path(__file__).with_name("output")
OUT.mkdir(exist_ok=True)

fib = preset("fibonacci")
W = fib.default_window
print(fib.report.summary())

# %% [markdown]
# A patch of radius 20.  Gaps between neighbours take two values whose ratio
# is the golden mean.

# %%
pts = model_set_points(fib, W, 20.0)
x = np.sort(pts.physical[:, 0])
gaps = np.unique(np.round(np.diff(x), 12))
print(f"{len(pts)} points, gap lengths {gaps}, ratio {gaps[1] / gaps[0]:.12f}")

fig, ax = plt.subplots(figsize=(8, 3))
ax.scatter(pts.physical[:, 0], pts.internal[:, 0], s=8)
ax.axhline(W.center[0] - W.sides[0] / 2, ls=":", c="k")
ax.axhline(W.center[0] + W.sides[0] / 2, ls=":", c="k")
ax.set_xlabel("x")
ax.set_ylabel("x*")
fig.tight_layout()
fig.savefig(OUT / "fibonacci_patch.png", dpi=120)

# %% [markdown]
# Three frequencies: zero (the density), a Bragg peak from the dual
# coordinates m = (1, 0), and t = 0.5 outside the Fourier module.

# %%
radii = np.geomspace(10, 1e4, 13)
tau = (1 + math.sqrt(5)) / 2
cases = {
    "t = 0": convergence_sweep(fib, W, 0.0, radii),
    "m = (1, 0)": convergence_sweep(fib, W, None, radii, m=[1, 0]),
    "t = 0.5": convergence_sweep(fib, W, 0.5, radii),
}
print(f"dens(Lambda) = tau/sqrt(5) = {tau / math.sqrt(5):.12f}")
for label, rows in cases.items():
    last = rows[-1]
    print(f"{label:12s} a_R = {last.a_R:.6f}  limit = {last.a_limit:.6f}  |err| = {last.abs_err:.2e}")

fig, ax = plt.subplots()
for label, rows in cases.items():
    ax.loglog([r.R for r in rows], [max(r.abs_err, 1e-16) for r in rows], "o-", label=label)
ax.loglog(radii, 1 / radii, "k--", label="1/R")
ax.set_xlabel("R")
ax.set_ylabel("|a_R - a|")
ax.legend()
fig.savefig(OUT / "fibonacci_convergence.png", dpi=120)
