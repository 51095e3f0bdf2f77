"""Command-line orchestration: validate -> simulate/shoot -> analyze -> report.

All inputs come from flat key=value files; outputs are CSV series and
JSON summaries with provenance headers, byte-stable for a fixed manifest
and seed.  Exit codes: 0 success, 2 invalid parameters, 3 no surviving
candidate, 4 failed analysis gates.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__, analysis
from .params import (ParameterError, Parameters, default_eps, derive_constants,
                     params_from_config, params_hash, read_config)
from .shooting import (NoSignChangeError, RunSettings, SearchRectangle,
                       ToleranceExhaustedError, classify_run,
                       find_blowup_data, transverse_check)
from .trajectory import TrajectoryRecord

EXIT_OK = 0
EXIT_INVALID_PARAMS = 2
EXIT_NO_SURVIVOR = 3
EXIT_FAILED_GATES = 4


@dataclass
class RunManifest:
    """Run configuration: parameter source plus solver/fit settings."""

    params: Parameters
    s_end: float
    out: str = "out"
    ds: float = 1e-2
    base_spacing: float = 0.05
    extent_factor: float = 4.0
    quad_order: int = 64
    sample_every: int = 1
    snapshot_ds: float = 0.1
    scan_points: int = 17
    bisect_tol: float = 1e-14
    d0: float = 0.0
    d1: float = 0.0
    workers: int = 1
    seed: int | None = None
    fit_s_min: float | None = None
    fit_s_max: float | None = None
    rate_tol: float = 0.15
    grad_tol: float = 0.2
    witness_tol: float = 0.05
    rate_gates: bool = True
    source: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: str, overrides: dict | None = None) -> "RunManifest":
        entries = read_config(path)
        if "params" in entries:
            base = read_config(os.path.join(os.path.dirname(path) or ".",
                                            entries["params"]))
            entries = {**base, **{k: v for k, v in entries.items()
                                  if k != "params"}}
        if overrides:
            entries.update({k: v for k, v in overrides.items()
                            if v is not None})
        params = params_from_config(entries)
        get = lambda k, d, cast=float: cast(entries[k]) if k in entries else d
        s_end = get("s_end", params.s0 + 10.0)
        return cls(
            params=params, s_end=s_end,
            out=str(entries.get("out", "out")),
            ds=get("ds", 1e-2),
            base_spacing=get("base_spacing", 0.05),
            extent_factor=get("extent_factor", 4.0),
            quad_order=get("quad_order", 64, int),
            sample_every=get("sample_every", 1, int),
            snapshot_ds=get("snapshot_ds", 0.1),
            scan_points=get("scan_points", 17, int),
            bisect_tol=get("bisect_tol", 1e-14),
            d0=get("d0", 0.0), d1=get("d1", 0.0),
            workers=get("workers", 1, int),
            seed=(int(entries["seed"]) if "seed" in entries else None),
            fit_s_min=(float(entries["fit_s_min"])
                       if "fit_s_min" in entries else None),
            fit_s_max=(float(entries["fit_s_max"])
                       if "fit_s_max" in entries else None),
            rate_tol=get("rate_tol", 0.15),
            grad_tol=get("grad_tol", 0.2),
            witness_tol=get("witness_tol", 0.05),
            rate_gates=bool(get("rate_gates", 1, int)),
            source=entries)

    def settings(self) -> RunSettings:
        return RunSettings(ds=self.ds, base_spacing=self.base_spacing,
                           extent_factor=self.extent_factor,
                           quad_order=self.quad_order,
                           sample_every=self.sample_every,
                           snapshot_ds=self.snapshot_ds)

    def rate_window(self):
        lo = self.fit_s_min if self.fit_s_min is not None \
            else self.params.s0 + 2.0
        hi = self.fit_s_max if self.fit_s_max is not None else self.s_end
        return (lo, hi)

    def provenance(self) -> str:
        return f"blowlab {__version__} params_hash={params_hash(self.params)}"


SCHEMA = {
    "scan.csv": {
        "d0": "initial-data coefficient on the constant mode",
        "d1": "initial-data coefficient on the linear mode",
        "s_exit": "first time a trap bound is violated (empty if survived)",
        "exit_mode": "violated bound: g0,g1,g2,g_minus,g_e,g_e_weighted,"
                     "numerical",
        "exit_sign": "sign of the exiting mode at s_exit",
        "survived": "1 if the run stayed in the trap to the horizon",
    },
    "trajectory.csv": {
        "s": "similarity time",
        "v0,v1,v2": "mode amplitudes of the inner part",
        "minus_norm": "sup |v_minus|/(1+|y|^3)",
        "e_norm": "sup |v_e|",
        "e_norm_w": "sup (1+|y|^beta)|v_e|",
        "n0,n1": "weighted sup of the field and its gradient",
        "sup_R": "sup |R(., s)|",
        "sup_N": "sup |N(., s)|",
        "ratio_*": "measured/bound slack per trap bound",
        "inside,on_boundary": "trap membership flags",
    },
    "term_rows.csv": {
        "s": "similarity time (snapshot cadence)",
        "R_minus_norm": "sup |R_minus|/(1+|y|^3)",
        "R_e_w": "sup (1+|y|^beta)|R_e|",
        "N_e_w": "sup (1+|y|^beta)|N_e|",
        "N_minus_norm": "sup |N_minus|/(1+|y|^3)",
    },
    "snapshots.csv": {
        "s": "similarity time", "y": "similarity space",
        "v": "deviation from the corrected profile",
        "w": "v + phi", "dv": "d/dy of w",
    },
}


def _write_schema(outdir: str) -> None:
    with open(os.path.join(outdir, "schema.json"), "w",
              encoding="utf-8") as fh:
        json.dump(SCHEMA, fh, indent=1, sort_keys=True)


def _write_json(path: str, payload: dict, manifest: RunManifest) -> None:
    payload = {"provenance": manifest.provenance(), **payload}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)


def _inequality_checklist(params: Parameters) -> list:
    p, q, n, beta = params.p, params.q, params.dim, params.beta
    rows = [
        ("p > 3", p > 3.0),
        ("N(p-1)/2 + 1 < q < N(p-1)/2 + (p+1)/2",
         0.5 * n * (p - 1) + 1 < q < 0.5 * n * (p - 1) + 0.5 * (p + 1)),
        ("beta window for mu",
         (0.0 <= beta < 2 / (p - 1)) if params.mu == 0.0
         else (n / (q - 1) < beta < 2 / (p - 1))),
        ("0 < eps1 <= 1/2", 0.0 < params.eps1 <= 0.5),
        ("0 < alpha < 1/2", 0.0 < params.alpha < 0.5),
        ("0 < eps < min(1, eps1/beta)",
         params.eps is not None and 0.0 < params.eps
         < (min(1.0, params.eps1 / beta) if beta > 0 else 1.0)),
        ("K0 >= 1", params.k0 >= 1.0),
        ("A >= 1", params.a_const >= 1.0),
        ("s0 > 1", params.s0 > 1.0),
    ]
    return rows


def cmd_validate(args) -> int:
    try:
        manifest = RunManifest.load(args.config, _overrides(args))
    except ParameterError as exc:
        print(f"invalid parameters: {exc}")
        return EXIT_INVALID_PARAMS
    params = manifest.params
    der = derive_constants(params)
    print(f"gamma   = {der.gamma:.12g}")
    print(f"kappa   = {der.kappa:.12g}")
    print(f"b       = {der.b_coeff:.12g}")
    print(f"eps     = {params.eps:.12g}"
          + ("  (auto-filled default)"
             if "eps" not in manifest.source else ""))
    print(f"eps default would be "
          f"{default_eps(params.beta, params.eps1):.12g}")
    print(f"T       = {params.T:.12g}  (s0 = {params.s0:g})")
    for name, ok in _inequality_checklist(params):
        print(f"  [{'OK' if ok else 'FAIL'}] {name}")
    print(f"params hash: {params_hash(params)}")
    return EXIT_OK


def _write_scan_csv(outdir: str, scan_rows, manifest: RunManifest) -> None:
    lines = [f"# {manifest.provenance()}",
             "d0,d1,s_exit,exit_mode,exit_sign,survived"]
    for row in scan_rows:
        survived = row.s_exit is None
        lines.append(",".join([
            f"{row.d0:.17g}", f"{row.d1:.17g}",
            "" if survived else f"{row.s_exit:.10g}",
            row.exit_mode or "", str(row.exit_sign), str(int(survived))]))
    with open(os.path.join(outdir, "scan.csv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_shoot(args) -> int:
    try:
        manifest = RunManifest.load(args.config, _overrides(args))
    except ParameterError as exc:
        print(f"invalid parameters: {exc}")
        return EXIT_INVALID_PARAMS
    os.makedirs(manifest.out, exist_ok=True)
    _write_schema(manifest.out)
    try:
        result = find_blowup_data(
            SearchRectangle(), manifest.s_end, manifest.params,
            manifest.settings(), scan_points=manifest.scan_points,
            tol=manifest.bisect_tol, workers=manifest.workers,
            seed=manifest.seed)
    except NoSignChangeError as exc:
        _write_scan_csv(manifest.out, exc.scan_rows, manifest)
        _write_json(os.path.join(manifest.out, "found.json"),
                    {"status": "no_sign_change"}, manifest)
        print("shoot: no sign change across the scan (map written)")
        return EXIT_NO_SURVIVOR
    except ToleranceExhaustedError as exc:
        _write_scan_csv(manifest.out, exc.scan_rows, manifest)
        d0_b, outcome, record = exc.best
        record.meta["provenance"] = manifest.provenance()
        record.save(manifest.out)
        _write_json(os.path.join(manifest.out, "found.json"),
                    {"status": "tolerance_exhausted", "best_d0": d0_b,
                     "best_s_exit": outcome.s_exit}, manifest)
        print(f"shoot: bisection exhausted; longest survivor exits at "
              f"{outcome.s_exit:.4f} (partial results written)")
        return EXIT_NO_SURVIVOR
    _write_scan_csv(manifest.out, result.scan_rows, manifest)
    record = result.record
    record.meta["provenance"] = manifest.provenance()
    record.save(manifest.out)
    _write_json(os.path.join(manifest.out, "found.json"),
                {"status": "found", "d0": result.d0, "d1": result.d1,
                 "s_end": manifest.s_end, "runs": result.n_runs,
                 "max_ratio": float(max(
                     np.max(record.scalars[f"ratio_{n}"]) for n in
                     ("g0", "g1", "g2", "g_minus", "g_e", "g_e_weighted")))},
                manifest)
    print(f"shoot: survivor d0 = {result.d0:.17g} (runs: {result.n_runs})")
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        manifest = RunManifest.load(args.config, _overrides(args))
    except ParameterError as exc:
        print(f"invalid parameters: {exc}")
        return EXIT_INVALID_PARAMS
    os.makedirs(manifest.out, exist_ok=True)
    _write_schema(manifest.out)
    outcome, record = classify_run(manifest.d0, manifest.d1, manifest.s_end,
                                   manifest.params, manifest.settings())
    record.meta["provenance"] = manifest.provenance()
    record.save(manifest.out)
    _write_json(os.path.join(manifest.out, "run.json"),
                {"d0": manifest.d0, "d1": manifest.d1,
                 "survived": outcome.survived, "s_exit": outcome.s_exit,
                 "exit_mode": outcome.exit_mode,
                 "exit_sign": outcome.exit_sign,
                 "transverse": transverse_check(record, outcome)},
                manifest)
    status = "survived" if outcome.survived else \
        f"exit at {outcome.s_exit:.4f} on {outcome.exit_mode}"
    print(f"simulate: d0={manifest.d0:g} d1={manifest.d1:g}: {status}")
    return EXIT_OK


def _rates_csv(outdir, record, params, manifest):
    s, e_vals, g_vals = analysis.profile_error_series(record, params)
    table = np.column_stack([s, e_vals, g_vals])
    np.savetxt(os.path.join(outdir, "rates.csv"), table, delimiter=",",
               fmt="%.17g", header=manifest.provenance()
               + "\ns,profile_error,profile_error_gradient")


def _witness_csv(outdir, record, params, manifest):
    import math as _math

    from blowlab.grids import Field
    from blowlab.profile import phi_parts

    d1, _ = record.grid.diff_ops()
    rows = []
    for k, s in enumerate(record.snap_s):
        s = float(s)
        y_pt = _math.sqrt(s)
        dv = Field(record.grid,
                   d1.apply(record.snap_v[k])).interpolator()(y_pt)
        _, dph, _, _ = phi_parts(np.array([y_pt]), s, params)
        dw = float(dv) + float(dph[0])
        big_g = _math.exp(s * (0.5 + 1.0 / (params.p - 1.0))) * abs(dw)
        rows.append((s, _math.exp(-s), big_g))
    np.savetxt(os.path.join(outdir, "witness.csv"), np.asarray(rows),
               delimiter=",", fmt="%.17g",
               header=manifest.provenance() + "\ns,t_to_blowup,grad_u")


def cmd_analyze(args) -> int:
    try:
        manifest = RunManifest.load(args.config, _overrides(args))
    except ParameterError as exc:
        print(f"invalid parameters: {exc}")
        return EXIT_INVALID_PARAMS
    traj_dir = args.trajectory or manifest.out
    try:
        record = TrajectoryRecord.load(traj_dir)
    except OSError as exc:
        print(f"analyze: cannot load trajectory from {traj_dir}: {exc}")
        return EXIT_FAILED_GATES
    params = record.params
    os.makedirs(manifest.out, exist_ok=True)
    report = analysis.build_report(
        record, params, rate_window=manifest.rate_window(),
        rate_tol=manifest.rate_tol, grad_tol=manifest.grad_tol,
        witness_tol=manifest.witness_tol, rate_gates=manifest.rate_gates)
    _write_json(os.path.join(manifest.out, "report.json"), report, manifest)
    _rates_csv(manifest.out, record, params, manifest)
    _witness_csv(manifest.out, record, params, manifest)
    pts = analysis.final_profile(
        record, analysis.covered_decade(record, params), params)
    with open(os.path.join(manifest.out, "final_profile.csv"), "w",
              encoding="utf-8") as fh:
        fh.write(f"# {manifest.provenance()}\n"
                 "x,s_last,u_star,du_star,target,ratio\n")
        for pt in pts:
            fh.write(f"{pt.x:.17g},{pt.s_last:.10g},{pt.u_star:.17g},"
                     f"{pt.du_star:.17g},{pt.target:.17g},{pt.ratio:.17g}\n")
    for gate in report["gates"]:
        print(f"  [{'PASS' if gate['pass'] else 'FAIL'}] {gate['name']}")
    if not report["all_pass"]:
        failed = [g["name"] for g in report["gates"] if not g["pass"]]
        print(f"analyze: failed gates: {', '.join(failed)}")
        return EXIT_FAILED_GATES
    print("analyze: all gates pass")
    return EXIT_OK


def cmd_report(args) -> int:
    rc = cmd_shoot(args)
    if rc != EXIT_OK:
        return rc
    rc = cmd_analyze(args)
    manifest = RunManifest.load(args.config, _overrides(args))
    _write_json(os.path.join(manifest.out, "bundle.json"),
                {"stages": ["validate", "shoot", "analyze"],
                 "analyze_exit": rc}, manifest)
    return rc


def _overrides(args) -> dict:
    out = {}
    for key in ("out", "d0", "d1", "s_end", "workers", "seed"):
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            out[key] = str(val)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="blowlab",
        description="similarity-variable blow-up laboratory")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("validate", cmd_validate), ("simulate", cmd_simulate),
                     ("shoot", cmd_shoot), ("analyze", cmd_analyze),
                     ("report", cmd_report)):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="manifest path")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--d0", type=float, default=None)
        sp.add_argument("--d1", type=float, default=None)
        sp.add_argument("--s-end", dest="s_end", type=float, default=None)
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
        if name == "analyze":
            sp.add_argument("--trajectory", default=None,
                            help="directory holding a saved run")
        sp.set_defaults(fn=fn)
    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
