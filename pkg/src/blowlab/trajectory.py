"""Time series and field snapshots collected along one simulation."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .grids import Field, Grid
from .params import Parameters, params_hash, validate_parameters

__all__ = ["TrajectoryRecord", "SCALAR_COLUMNS"]

SCALAR_COLUMNS = (
    "s", "v0", "v1", "v2", "minus_norm", "e_norm", "e_norm_w",
    "n0", "n1", "sup_R", "sup_N",
    "ratio_g0", "ratio_g1", "ratio_g2", "ratio_g_minus",
    "ratio_g_e", "ratio_g_e_weighted", "inside", "on_boundary",
)

ROW_COLUMNS = ("s", "R_minus_norm", "R_e_w", "N_e_w", "N_minus_norm")


@dataclass
class TrajectoryRecord:
    """Sampled scalars plus coarser field snapshots for one run."""

    scalars: dict                 # name -> np.ndarray, SCALAR_COLUMNS
    rows: dict                    # name -> np.ndarray, ROW_COLUMNS cadence
    snap_s: np.ndarray
    snap_v: np.ndarray            # shape (n_snapshots, n_nodes)
    grid_nodes: np.ndarray
    meta: dict
    _grid: Grid | None = field(default=None, repr=False)

    @property
    def s(self) -> np.ndarray:
        return self.scalars["s"]

    @property
    def grid(self) -> Grid:
        if self._grid is None:
            self._grid = Grid(nodes=self.grid_nodes)
        return self._grid

    @property
    def params(self) -> Parameters:
        keys = ("p", "q", "mu", "dim", "beta", "eps1", "alpha", "eps",
                "k0", "a_const", "s0")
        kw = {k: self.meta["params"][k] for k in keys}
        kw["dim"] = int(kw["dim"])
        return validate_parameters(Parameters(**kw))

    def snapshot_field(self, k: int) -> Field:
        return Field(self.grid, self.snap_v[k])

    def strictly_increasing(self) -> bool:
        return bool(np.all(np.diff(self.s) > 0))

    # -- persistence ----------------------------------------------------------

    def save(self, outdir, prefix: str = "") -> None:
        os.makedirs(outdir, exist_ok=True)
        header = self.meta.get("provenance", "")
        scal = np.column_stack([self.scalars[c] for c in SCALAR_COLUMNS])
        np.savetxt(os.path.join(outdir, prefix + "trajectory.csv"), scal,
                   delimiter=",", fmt="%.17g",
                   header=header + "\n" + ",".join(SCALAR_COLUMNS))
        rows = np.column_stack([self.rows[c] for c in ROW_COLUMNS])
        np.savetxt(os.path.join(outdir, prefix + "term_rows.csv"), rows,
                   delimiter=",", fmt="%.17g",
                   header=header + "\n" + ",".join(ROW_COLUMNS))
        snaps = self._snapshot_table()
        np.savetxt(os.path.join(outdir, prefix + "snapshots.csv"), snaps,
                   delimiter=",", fmt="%.17g",
                   header=header + "\ns,y,v,w,dv")
        with open(os.path.join(outdir, prefix + "record_meta.json"), "w",
                  encoding="utf-8") as fh:
            json.dump({"meta": self.meta,
                       "grid_nodes": self.grid_nodes.tolist(),
                       "snap_s": self.snap_s.tolist()}, fh, indent=1)

    def _snapshot_table(self) -> np.ndarray:
        from .profile import phi_parts

        params = self.params
        d1, _ = self.grid.diff_ops()
        blocks = []
        for k, s in enumerate(self.snap_s):
            v = self.snap_v[k]
            ph, dph, _, _ = phi_parts(self.grid_nodes, float(s), params)
            blocks.append(np.column_stack([
                np.full_like(self.grid_nodes, float(s)), self.grid_nodes,
                v, v + ph, d1.apply(v) + dph]))
        return np.concatenate(blocks, axis=0) if blocks else np.zeros((0, 5))

    @classmethod
    def load(cls, outdir, prefix: str = "") -> "TrajectoryRecord":
        with open(os.path.join(outdir, prefix + "record_meta.json"),
                  encoding="utf-8") as fh:
            aux = json.load(fh)
        scal = np.loadtxt(os.path.join(outdir, prefix + "trajectory.csv"),
                          delimiter=",", ndmin=2)
        rows = np.loadtxt(os.path.join(outdir, prefix + "term_rows.csv"),
                          delimiter=",", ndmin=2)
        nodes = np.asarray(aux["grid_nodes"])
        snap_s = np.asarray(aux["snap_s"])
        snaps = np.loadtxt(os.path.join(outdir, prefix + "snapshots.csv"),
                           delimiter=",", ndmin=2)
        n_nodes = len(nodes)
        snap_v = (snaps[:, 2].reshape(len(snap_s), n_nodes)
                  if len(snap_s) else np.zeros((0, n_nodes)))
        return cls(
            scalars={c: scal[:, i] for i, c in enumerate(SCALAR_COLUMNS)},
            rows={c: rows[:, i] for i, c in enumerate(ROW_COLUMNS)},
            snap_s=snap_s, snap_v=snap_v, grid_nodes=nodes, meta=aux["meta"])


def make_meta(params: Parameters, extra: dict) -> dict:
    from . import __version__

    meta = {"params": {k: getattr(params, k) for k in
                       ("p", "q", "mu", "dim", "beta", "eps1", "alpha",
                        "eps", "k0", "a_const", "s0")},
            "params_hash": params_hash(params),
            "version": __version__}
    meta["provenance"] = (f"blowlab {__version__} params_hash="
                          f"{meta['params_hash']}")
    meta.update(extra)
    return meta
