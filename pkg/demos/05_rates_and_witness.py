"""Rate verification on a saved run: profile-error decay, the frozen
final profile against its explicit equivalent, and the moving-point
gradient witness.

Reads out/default if a CLI shoot has been run there; otherwise performs
a reduced shoot first (a few minutes).  Writes demos/output/rates.png.
"""

import os
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from blowlab import analysis
from blowlab.trajectory import TrajectoryRecord

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)
RUN_DIR = os.path.join(os.path.dirname(__file__), "..", "out", "default")

if os.path.exists(os.path.join(RUN_DIR, "record_meta.json")):
    rec = TrajectoryRecord.load(RUN_DIR)
    print(f"loaded saved run from {RUN_DIR}")
else:
    print("no saved run found; shooting a reduced default run first...")
    from blowlab.params import Parameters, validate_parameters
    from blowlab.shooting import RunSettings, SearchRectangle, \
        find_blowup_data
    P = validate_parameters(Parameters(
        p=5, q=4, mu=1.0, beta=0.4, eps1=0.25, alpha=0.4, k0=2.0,
        a_const=20.0, s0=20.0))
    res = find_blowup_data(SearchRectangle(), 30.0, P,
                           RunSettings(ds=1e-2, base_spacing=0.08,
                                       sample_every=2),
                           scan_points=9, tol=1e-13)
    rec = res.record

P = rec.params
s, E, Eg = analysis.profile_error_series(rec, P)
wit = analysis.gradient_blowup_witness(rec, P)
xs = analysis.covered_decade(rec, P)
pts = analysis.final_profile(rec, xs, P)

fig, axes = plt.subplots(1, 3, figsize=(13, 3.8))
axes[0].loglog(s, E, label="weighted profile error")
axes[0].loglog(s, Eg, label="gradient analogue")
axes[0].set_xlabel("s")
axes[0].set_title("approach to the universal shape")
axes[0].legend(fontsize=8)

axes[1].semilogx([pt.x for pt in pts], [pt.ratio for pt in pts], "o-")
axes[1].axhline(1.0, c="gray", ls=":")
axes[1].set_ylim(0, 2.2)
axes[1].set_xlabel("|x|")
axes[1].set_title("frozen profile / explicit equivalent")

if wit.condition_met:
    tau = np.exp(-np.asarray(rec.snap_s))
    axes[2].loglog(tau, wit.fit.constant * tau ** wit.fit.exponent, "k:",
                   label=f"fit, exponent {wit.fit.exponent:.3f}")
    axes[2].set_xlabel("T - t")
    axes[2].set_title("gradient witness on the moving point")
    axes[2].legend(fontsize=8)
    print(f"witness: exponent {wit.fit.exponent:.4f} "
          f"(target {wit.target_exponent}), limiting constant "
          f"{wit.limit_constant:.4f} vs |f'(1)| = {wit.grad_f_at_1:.4f}")
else:
    axes[2].text(0.1, 0.5, "witness needs eps1 <= 1/2 - beta/2")

fig.tight_layout()
path = os.path.join(OUT, "rates.png")
fig.savefig(path, dpi=130)
print(f"wrote {path}")

for pt in pts:
    print(f"  x = {pt.x:.3e}: ratio {pt.ratio:.3f} "
          f"(frozen at s = {pt.s_last:.1f})")
