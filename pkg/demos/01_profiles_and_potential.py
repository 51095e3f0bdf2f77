"""Profile shapes: the universal blow-up shape f, the corrected profile,
the potential it induces, and the two-parameter initial data.

Writes demos/output/profiles.png.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from blowlab.params import Parameters, validate_parameters, derive_constants
from blowlab.profile import (cutoff_chi0, f_profile, initial_data_psi, phi,
                             potential_V)

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

P = validate_parameters(Parameters(p=5, q=4, mu=1.0, beta=0.4, eps1=0.25,
                                   alpha=0.4, k0=2.0, a_const=20.0, s0=20.0))
der = derive_constants(P)
print(f"p = {P.p}, q = {P.q}: gamma = {der.gamma}, kappa = {der.kappa:.10f},"
      f" b = {der.b_coeff}")
print(f"auto-filled eps = {P.eps} (half the admissible cap)")

fig, axes = plt.subplots(2, 2, figsize=(11, 7))

z = np.linspace(-8, 8, 400)
axes[0, 0].plot(z, f_profile(z, P))
axes[0, 0].axhline(der.kappa, ls=":", c="gray", label="kappa")
axes[0, 0].set_title("universal shape f(z)")
axes[0, 0].set_xlabel("z")
axes[0, 0].legend()

y = np.linspace(-60, 60, 1200)
for s in (20.0, 50.0, 200.0):
    val, _ = phi(y, s, P)
    axes[0, 1].plot(y, val - f_profile(y / np.sqrt(s), P),
                    label=f"s = {s:g}")
axes[0, 1].set_title("correction phi - f (cutoff-localized, O(1/s))")
axes[0, 1].set_xlabel("y")
axes[0, 1].legend()

for s in (20.0, 200.0):
    axes[1, 0].plot(y, potential_V(y, s, P), label=f"s = {s:g}")
axes[1, 0].axhline(-P.p / (P.p - 1), ls=":", c="gray",
                   label="-p/(p-1) far field")
axes[1, 0].set_title("potential V(y, s)")
axes[1, 0].set_xlabel("y")
axes[1, 0].legend()

yy = np.linspace(-12, 12, 600)
for d0, d1 in ((1.0, 0.0), (0.0, 0.5), (0.7, -0.3)):
    axes[1, 1].plot(yy, initial_data_psi(d0, d1, P.s0, yy, P),
                    label=f"d = ({d0:g}, {d1:g})")
axes[1, 1].set_title("initial data (A/s0^2-scale, compact support)")
axes[1, 1].set_xlabel("y")
axes[1, 1].legend()

fig.tight_layout()
path = os.path.join(OUT, "profiles.png")
fig.savefig(path, dpi=130)
print(f"wrote {path}")

# the identity that pins f: -z f'/2 - f/(p-1) + f^p = 0
from blowlab.profile import f_gradient
zz = np.linspace(0, 50, 10000)
ff = f_profile(zz, P)
res = np.max(np.abs(-0.5 * zz * f_gradient(zz, P) - ff / 4 + ff ** 5))
print(f"profile identity residual: {res:.2e}")
print(f"smooth bump checks: chi0(0.5) = {cutoff_chi0(0.5)},"
      f" chi0(3) = {cutoff_chi0(3.0)}, chi0(1.5) = {cutoff_chi0(1.5):.4f}")
