"""One trajectory through the trap: membership slacks, mode series, and
the measured remainder/new-term compensated rows.

Writes demos/output/trajectory.png.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from blowlab.analysis import remainder_and_newterm_report
from blowlab.params import Parameters, validate_parameters
from blowlab.shooting import RunSettings, classify_run

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

P = validate_parameters(Parameters(p=5, q=4, mu=1.0, beta=0.4, eps1=0.25,
                                   alpha=0.4, k0=2.0, a_const=20.0, s0=20.0))
outcome, rec = classify_run(0.0, 0.0, P.s0 + 4.0, P,
                            RunSettings(ds=1e-2, base_spacing=0.08,
                                        snapshot_ds=0.25))
print("run from d = (0, 0):",
      "survived" if outcome.survived else
      f"exits at s = {outcome.s_exit:.2f} on {outcome.exit_mode}")

s = rec.s
fig, axes = plt.subplots(1, 3, figsize=(13, 3.8))
for name in ("g0", "g2", "g_minus", "g_e_weighted"):
    axes[0].semilogy(s, np.maximum(rec.scalars[f"ratio_{name}"], 1e-18),
                     label=name)
axes[0].axhline(1.0, c="k", lw=0.8)
axes[0].set_title("membership slack ratios")
axes[0].set_xlabel("s")
axes[0].legend(fontsize=8)

axes[1].plot(s, rec.scalars["v0"], label="v0 (expanding)")
axes[1].plot(s, rec.scalars["v2"], label="v2 (neutral)")
axes[1].set_title("controlled mode amplitudes")
axes[1].set_xlabel("s")
axes[1].legend(fontsize=8)

axes[2].plot(s, s * rec.scalars["sup_R"], label="s * sup|R|")
gamma = 0.25
axes[2].plot(s, np.exp(0.5 * gamma * s) * rec.scalars["sup_N"],
             label="e^{gamma s/2} sup|N|")
axes[2].set_title("compensated term rows (flat = law holds)")
axes[2].set_xlabel("s")
axes[2].legend(fontsize=8)

fig.tight_layout()
path = os.path.join(OUT, "trajectory.png")
fig.savefig(path, dpi=130)
print(f"wrote {path}")

for row in remainder_and_newterm_report(rec, P):
    tag = "zero" if row.identically_zero else f"x{row.max_over_min:.2f}"
    print(f"  {row.name}: [{row.c_min:.3e}, {row.c_max:.3e}] ({tag})")
