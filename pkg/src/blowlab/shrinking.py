"""Executable trap region: time-indexed bounds on the five components.

A decomposed field is inside the trap at time s when every measured
quantity sits below its bound; the per-bound slack ratios drive both the
exit detection of the shooting stage and the reported diagnostics.
Boundary membership is closed, with a small tolerance band flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grids import Field
from .params import Parameters
from .spectral import ModeDecomposition, project_minus_norm, reconstruct

__all__ = [
    "BOUND_NAMES",
    "MembershipReport",
    "trap_bounds",
    "weighted_norm_beta",
    "membership",
    "derived_sup_bounds",
]

BOUND_NAMES = ("g0", "g1", "g2", "g_minus", "g_e", "g_e_weighted")

BOUNDARY_BAND = 1e-9


def trap_bounds(s: float, params: Parameters) -> dict:
    """Bound value per component at time s."""
    a = params.a_const
    e1 = params.eps1
    return {
        "g0": a / s ** 2,
        "g1": a / s ** 2,
        "g2": a ** 2 * math.log(s) / s ** 2,
        "g_minus": a / s ** (2.5 - e1),
        "g_e": a ** 2 / s ** (1.0 - e1),
        "g_e_weighted": a ** 2 / s ** (1.0 - params.beta / 2.0 - e1),
    }


@dataclass(frozen=True)
class MembershipReport:
    s: float
    inside: bool
    ratios: tuple          # six slack ratios, BOUND_NAMES order
    measured: tuple        # the six measured quantities
    exit_mode: str | None  # largest-ratio bound when outside
    on_boundary: bool      # some ratio within BOUNDARY_BAND of 1

    def ratio(self, name: str) -> float:
        return self.ratios[BOUND_NAMES.index(name)]

    @staticmethod
    def csv_header() -> str:
        cols = ["s"] + [f"ratio_{n}" for n in BOUND_NAMES]
        return ",".join(cols + ["inside", "on_boundary", "exit_mode"])

    def csv_row(self) -> str:
        vals = [f"{self.s:.10g}"] + [f"{r:.10g}" for r in self.ratios]
        vals += [str(int(self.inside)), str(int(self.on_boundary)),
                 self.exit_mode or ""]
        return ",".join(vals)


def weighted_norm_beta(g: Field, grad_g: Field, params: Parameters):
    """sup (1+|y|^beta)|g| and sup (1+|y|^beta)|grad g| over the grid."""
    w = 1.0 + np.abs(g.grid.nodes) ** params.beta
    n0 = float(np.max(w * np.abs(g.values)))
    n1 = float(np.max(w * np.abs(grad_g.values)))
    return n0, n1


def _measured(dec: ModeDecomposition, params: Parameters):
    y = dec.v_e.grid.nodes
    w = 1.0 + np.abs(y) ** params.beta
    return (abs(dec.v0), abs(dec.v1), abs(dec.v2),
            project_minus_norm(dec),
            dec.v_e.sup(),
            float(np.max(w * np.abs(dec.v_e.values))))


def membership(dec: ModeDecomposition, s: float,
               params: Parameters) -> MembershipReport:
    """Per-bound slack of a decomposed field; exit mode = worst bound."""
    bounds = trap_bounds(s, params)
    meas = _measured(dec, params)
    ratios = tuple(m / bounds[n] for m, n in zip(meas, BOUND_NAMES))
    inside = all(r <= 1.0 for r in ratios)
    on_boundary = any(1.0 - BOUNDARY_BAND <= r <= 1.0 for r in ratios)
    exit_mode = None
    if not inside:
        exit_mode = BOUND_NAMES[int(np.argmax(ratios))]
    return MembershipReport(s=s, inside=inside, ratios=ratios, measured=meas,
                            exit_mode=exit_mode, on_boundary=on_boundary)


def derived_sup_bounds(dec: ModeDecomposition, s: float, params: Parameters):
    """Sup norms the trap implies: (inner, global, weighted inner/global)."""
    g = reconstruct(dec)
    y = g.grid.nodes
    w = 1.0 + np.abs(y) ** params.beta
    inner_mask = np.abs(y) <= 2.0 * params.k0 * math.sqrt(s)
    av = np.abs(g.values)
    inner = float(np.max(av[inner_mask]))
    glob = float(np.max(av))
    inner_w = float(np.max((w * av)[inner_mask]))
    global_w = float(np.max(w * av))
    return inner, glob, inner_w, global_w
