"""Spectral machinery: Gaussian-weighted orthogonality, the discrete
eigenrelation of the drift operator, and the five-component split.

Writes demos/output/spectral.png.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from blowlab.grids import Field
from blowlab.params import Parameters, validate_parameters
from blowlab.pde import discrete_L, grid_for_run
from blowlab.spectral import (blowup_cutoff_chi, decompose, hermite_h,
                              hermite_norm_sq, inner_product_rho, make_basis,
                              reconstruct)

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

P = validate_parameters(Parameters(p=5, q=4, mu=1.0, beta=0.4, eps1=0.25,
                                   alpha=0.4, k0=2.0, a_const=20.0, s0=20.0))
basis = make_basis(12, 64)
grid = grid_for_run(P, 30.0)

gram = np.zeros((11, 11))
for n in range(11):
    for m in range(11):
        val = inner_product_rho(lambda y, n=n: hermite_h(n, y),
                                lambda y, m=m: hermite_h(m, y), basis)
        norm = np.sqrt(hermite_norm_sq(n) * hermite_norm_sq(m))
        gram[n, m] = val / norm
print("normalized Gram deviation from identity:",
      f"{np.max(np.abs(gram - np.eye(11))):.2e}")

print("discrete eigenrelation (5-point stencils, graded mesh):")
for m in range(5):
    hm = Field.from_function(grid, lambda y: hermite_h(m, y))
    res = discrete_L(hm).values - (1 - m / 2) * hm.values
    print(f"  m = {m}: interior residual {np.max(np.abs(res[2:-2])):.2e}")

s = 25.0
v = Field.from_function(grid,
                        lambda y: 0.05 * np.exp(-y ** 2 / 18) * (1 + y))
dec = decompose(v, s, basis, P)
print(f"sample decomposition at s = {s}: v0 = {dec.v0:.5f}, "
      f"v1 = {dec.v1:.5f}, v2 = {dec.v2:.5f}")
print("reconstruction error:",
      f"{np.max(np.abs(reconstruct(dec).values - v.values)):.2e}")

fig, axes = plt.subplots(1, 3, figsize=(13, 3.6))
im = axes[0].imshow(np.log10(np.abs(gram - np.eye(11)) + 1e-17))
axes[0].set_title("log10 |Gram - I| (normalized)")
fig.colorbar(im, ax=axes[0])

yy = grid.nodes
axes[1].plot(yy, v.values, label="field")
axes[1].plot(yy, dec.v_minus.values, label="minus part")
axes[1].plot(yy, dec.v_e.values, label="outer part")
axes[1].plot(yy, blowup_cutoff_chi(yy, s, P) * 0.05, ls=":",
             label="cutoff (scaled)")
axes[1].set_xlim(-25, 25)
axes[1].legend(fontsize=8)
axes[1].set_title("five-component split")

for m in range(4):
    axes[2].plot(yy, hermite_h(m, yy), label=f"m = {m}")
axes[2].set_xlim(-4, 4)
axes[2].set_ylim(-10, 10)
axes[2].legend(fontsize=8)
axes[2].set_title("rescaled Hermite modes")

fig.tight_layout()
path = os.path.join(OUT, "spectral.png")
fig.savefig(path, dpi=130)
print(f"wrote {path}")
