import numpy as np
import pytest

from blowlab.params import Parameters, validate_parameters
from blowlab.shooting import (NoSignChangeError, RunOutcome, RunSettings,
                              SearchRectangle, classify_run, find_blowup_data,
                              find_blowup_data_2d, transverse_check)
from blowlab.trajectory import SCALAR_COLUMNS, TrajectoryRecord

P = validate_parameters(Parameters(p=5, q=4, mu=1.0, beta=0.4, eps1=0.25,
                                   alpha=0.4, k0=2.0, a_const=20.0, s0=20.0))
FAST = RunSettings(ds=2e-2, base_spacing=0.1, sample_every=1,
                   snapshot_ds=0.5)


def synthetic_record(s, v0):
    scalars = {c: np.zeros_like(s) for c in SCALAR_COLUMNS}
    scalars["s"] = np.asarray(s, dtype=float)
    scalars["v0"] = np.asarray(v0, dtype=float)
    return TrajectoryRecord(
        scalars=scalars,
        rows={c: np.zeros(0) for c in
              ("s", "R_minus_norm", "R_e_w", "N_e_w", "N_minus_norm")},
        snap_s=np.zeros(0), snap_v=np.zeros((0, 3)),
        grid_nodes=np.array([-1.0, 0.0, 1.0]), meta={"params": {}})


def test_rectangle_must_sit_in_square():
    with pytest.raises(ValueError):
        SearchRectangle(d0_lo=-3.0)
    SearchRectangle()  # default is fine


def test_even_data_keeps_mode_one_zero():
    outcome, record = classify_run(0.3, 0.0, P.s0 + 1.0, P, FAST)
    assert np.max(np.abs(record.scalars["v1"])) < 1e-12
    assert record.strictly_increasing()


def test_large_d0_exits_on_mode_zero_with_matching_sign():
    for d0, sign in ((2.0, 1), (-2.0, -1)):
        outcome, record = classify_run(d0, 0.0, P.s0 + 1.0, P, FAST)
        assert not outcome.survived
        assert outcome.exit_mode == "g0"
        assert outcome.exit_sign == sign
        assert transverse_check(record, outcome) is True


def test_transverse_check_tangent_is_false():
    s = np.linspace(24.0, 25.0, 51)
    rec = synthetic_record(s, P.a_const / s ** 2)
    out = RunOutcome(survived=False, s_exit=25.0, exit_mode="g0",
                     exit_sign=1,
                     crossing_derivative=float(
                         (rec.scalars["v0"][-1] - rec.scalars["v0"][-3])
                         / (s[-1] - s[-3])))
    assert transverse_check(rec, out) is False


def test_transverse_check_linear_crossing_is_true():
    s = np.linspace(24.0, 25.0, 51)
    s1 = s[-1]
    rec = synthetic_record(s, (P.a_const / s1 ** 2) * (s / s1))
    out = RunOutcome(survived=False, s_exit=s1, exit_mode="g0", exit_sign=1,
                     crossing_derivative=float(
                         (rec.scalars["v0"][-1] - rec.scalars["v0"][-3])
                         / (s[-1] - s[-3])))
    assert transverse_check(rec, out) is True


def test_transverse_check_not_applicable():
    rec = synthetic_record(np.array([20.0, 20.1]), np.zeros(2))
    out = RunOutcome(survived=True)
    assert transverse_check(rec, out) is None
    out2 = RunOutcome(survived=False, s_exit=20.1, exit_mode="g_e",
                      exit_sign=1)
    assert transverse_check(rec, out2) is None


def test_find_blowup_data_short_horizon():
    res = find_blowup_data(SearchRectangle(), P.s0 + 1.5, P, FAST,
                           scan_points=9)
    assert res.outcome.survived
    rec = res.record
    for name in ("g0", "g1", "g2", "g_minus", "g_e", "g_e_weighted"):
        assert np.max(rec.scalars[f"ratio_{name}"]) <= 1.0
    assert len(res.scan_rows) >= 1
    assert abs(res.d0) <= 2.0


def test_no_sign_change_reported_with_scan():
    with pytest.raises(NoSignChangeError) as exc:
        find_blowup_data(SearchRectangle(d0_lo=1.5, d0_hi=2.0),
                         P.s0 + 1.0, P, FAST, scan_points=3)
    assert len(exc.value.scan_rows) == 3


def test_exit_time_monotone_near_shot():
    # closer to the shot value, later the exit
    res = find_blowup_data(SearchRectangle(), P.s0 + 4.0, P, FAST,
                           scan_points=9)
    d0_star = res.d0
    exits = []
    for off in (0.5, 0.2, 0.08):
        outcome, _ = classify_run(d0_star + off, 0.0, P.s0 + 4.0, P, FAST)
        assert not outcome.survived
        exits.append(outcome.s_exit)
    assert exits[0] < exits[1] < exits[2]


def test_doubling_amplitude_enlarges_surviving_set():
    horizon = P.s0 + 1.5
    counts = {}
    for a in (20.0, 40.0):
        params = validate_parameters(Parameters(
            p=5, q=4, mu=1.0, beta=0.4, eps1=0.25, alpha=0.4, k0=2.0,
            a_const=a, s0=20.0))
        n = 0
        for d0 in np.linspace(-1.5, 1.5, 7):
            outcome, _ = classify_run(float(d0), 0.0, horizon, params, FAST)
            n += outcome.survived
        counts[a] = n
    assert counts[40.0] >= counts[20.0]


def test_two_dimensional_mode_runs():
    res = find_blowup_data_2d(
        SearchRectangle(-1.0, 1.0, -0.5, 0.5), P.s0 + 0.8, P,
        RunSettings(ds=4e-2, base_spacing=0.15, sample_every=2,
                    snapshot_ds=1.0),
        scan_points=5, tol_d1=0.2, tol_d0=1e-3)
    assert res.outcome.survived
    assert abs(res.d1) <= 0.5


def test_scan_workers_match_serial():
    serial = find_blowup_data(SearchRectangle(), P.s0 + 1.0, P, FAST,
                              scan_points=5)
    parallel = find_blowup_data(SearchRectangle(), P.s0 + 1.0, P, FAST,
                                scan_points=5, workers=2)
    assert parallel.d0 == serial.d0
    for a, b in zip(serial.scan_rows, parallel.scan_rows):
        assert (a.d0, a.s_exit, a.exit_mode) == (b.d0, b.s_exit, b.exit_mode)
