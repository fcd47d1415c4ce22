# %% [markdown]
# # Ammann-Beenker: diffraction spectrum and the octagonal window
#
# Z^4 projected onto two planes gives an octagonal model set.  Bragg
# intensities are |dens(L) 1^_W(-theta*)|^2, exact because the window is a
# polygon.  The dyadic decomposition of the same window is shown as well,
# since that is the route taken for windows without a closed-form transform.

# %%
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from modelset_fb import GeneralWindow, model_set_points, preset, spectrum

OUT = Path(__file__).with_name("output")
OUT.mkdir(exist_ok=True)

ab = preset("ammann_beenker")
W = ab.default_window
print(f"dens(L) = {ab.density:.6f}, vol(W) = {W.volume:.6f}")

# %%
pts = model_set_points(ab, W, 8.0)
fig, axes = plt.subplots(1, 2, figsize=(10, 5))
axes[0].scatter(*pts.physical.T, s=4)
axes[0].set_title(f"{len(pts)} points, |x| <= 8")
axes[1].scatter(*pts.internal.T, s=2)
axes[1].set_title("internal images")
for ax in axes:
    ax.set_aspect("equal")
fig.savefig(OUT / "ab_patch.png", dpi=120)

# %% [markdown]
# Peaks within |theta| <= 4 with intensity above 1e-3.  The brightest peak
# sits at the origin with intensity (dens * vol)^2.

# %%
peaks = spectrum(ab, W, K_phys=4.0, I_min=1e-3)
for p in peaks[:6]:
    print(p.m, np.round(p.theta, 4), f"{p.intensity:.5f}")
theta = np.array([p.theta for p in peaks])
inten = np.array([p.intensity for p in peaks])
fig, ax = plt.subplots(figsize=(6, 6))
ax.scatter(theta[:, 0], theta[:, 1], s=400 * inten / inten.max(), c="k")
ax.set_aspect("equal")
ax.set_title("Bragg peaks, area ~ intensity")
fig.savefig(OUT / "ab_spectrum.png", dpi=120)

# %% [markdown]
# Dyadic cubes inside the octagon (I) and cubes meeting its boundary (D).

# %%
G = GeneralWindow.wrap(W)
for n in range(3, 9):
    dec = G.decompose(n)
    print(f"level {n}: vol(I) = {dec.vol_inner:.5f}  vol(D) = {dec.vol_boundary:.5f}")
y = np.array([0.3, -0.2])
dec = G.decompose(8)
print(f"dyadic FT at {y}: {dec.inner_ft(y):.6f}; exact {W.ft(y):.6f}; bound {dec.vol_boundary:.4f}")
