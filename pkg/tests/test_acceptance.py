"""Acceptance criteria C1-C7, each at its pinned tolerance.

Every test records one PASS/FAIL line, printed in the "acceptance criteria"
section of the terminal summary.
"""

import time

import numpy as np
import pytest

from wristhrv import cli, hrv, ingest, pipeline, stats, synth
from wristhrv.model import NormStats, init_weights, load_weights, save_weights

from gradcheck import gradient_check
from test_hrv import rmssd_oracle, series_oracle
from test_stats import t_sf_trapezoid

SEED = 7
HOURS = 6


def test_c1_rmssd_oracle(record_criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(2, 121))
        window = np.round(rng.uniform(250, 2000, size=n), 3).tolist()
        mismatches += hrv.rmssd_window(window) != rmssd_oracle(window)
    session = synth.generate(synth.SynthConfig(seed=1, duration_s=600, activity_profile=[(300, 600, 0.8)]))
    recs = session.watch_ibi.records()
    series_ok = hrv.rmssd_series(recs) == series_oracle(recs)
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and series_ok and elapsed < 5.0
    record_criterion("C1", ok, f"rmssd oracle: {mismatches}/1000 window mismatches, series_equal={series_ok}, {elapsed:.2f}s (<5s)")
    assert ok


def test_c2_statistics(record_criterion):
    cases = [([1, 2, 3], [1, 2, 3], 1.0), ([1, 2, 3], [3, 2, 1], -1.0), ([1, 2, 3, 4], [2, 1, 4, 3], 0.6)]
    r_err = max(abs(stats.pearson(x, y).r - r) for x, y, r in cases)
    t_err = 0.0
    for df in (1, 5, 30, 1000):
        for t in np.linspace(-8, 8, 33):
            t_err = max(t_err, abs(stats.student_t_sf(float(t), df) - t_sf_trapezoid(t, df)))
    ok = r_err <= 1e-12 and t_err <= 1e-6
    record_criterion("C2", ok, f"pearson max |dr|={r_err:.1e} (<=1e-12), t tail max |dp|={t_err:.1e} (<=1e-6)")
    assert ok


def test_c3_gradient_check(record_criterion):
    start = time.perf_counter()
    w = init_weights(11, NormStats(np.zeros(3), np.ones(3), 5.0, 15.0))
    rng = np.random.default_rng(7)
    batch = (rng.normal(size=(1, 3, 64)), rng.normal(10.0, 20.0, size=1))
    coarse = gradient_check(w, batch, h=1e-4)
    fine = gradient_check(w, batch, h=1e-6, kink_aware=False)
    elapsed = time.perf_counter() - start
    worst = max(e for e, _ in coarse.values())
    worst_fine = max(e for e, _ in fine.values())
    min_checked = min(c for _, c in coarse.values())
    ok = worst < 1e-4 and worst_fine < 1e-4 and min_checked >= 0.9 and elapsed < 60.0
    record_criterion(
        "C3", ok,
        f"gradient rel err h=1e-4 max {worst:.1e} over >= {min_checked:.0%} of entries per tensor, "
        f"h=1e-6 all entries max {worst_fine:.1e} (<1e-4), {elapsed:.1f}s (<60s)",
    )
    assert ok


def _full_run(root):
    """synth -> analyze -> train -> eval through the CLI; returns report texts and wall time."""
    start = time.perf_counter()
    data = root / "data"
    assert cli.main(["synth", "--seed", str(SEED), "--duration", str(HOURS * 3600), "--profile", "mixed", "--out", str(data)]) == 0
    io = ["--ref", str(data / "ref_ibi.csv"), "--watch", str(data / "watch_ibi.csv"), "--accel", str(data / "accel.csv")]
    assert cli.main(["analyze", *io, "--report", str(root / "analyze.txt")]) == 0
    assert cli.main(["train", *io, "--seed", str(SEED), "--weights-out", str(root / "weights.bin")]) == 0
    assert cli.main(["eval", *io, "--weights", str(root / "weights.bin"), "--report", str(root / "eval.txt")]) == 0
    elapsed = time.perf_counter() - start
    return {
        "analyze": (root / "analyze.txt").read_bytes(),
        "eval": (root / "eval.txt").read_bytes(),
        "weights": (root / "weights.bin").read_bytes(),
        "elapsed": elapsed,
    }


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    return [_full_run(tmp_path_factory.mktemp(f"run{i}")) for i in range(2)]


def test_c4_movement_error_correlation(runs, record_criterion):
    kv = pipeline.parse_report(runs[0]["analyze"].decode())
    r = float(kv["movement_error_corr.r"])
    p = float(kv["movement_error_corr.p"])
    ok = r > 0 and p < 0.001
    record_criterion("C4", ok, f"movement vs |error| r={r:.3f} (>0), p={p:.1e} (<0.001), n={kv['movement_error_corr.n']}")
    assert ok


def test_c5_prediction_improves(runs, record_criterion):
    kv = pipeline.parse_report(runs[0]["eval"].decode())
    before, after = float(kv["rmse_before"]), float(kv["rmse_after"])
    r_before, r_after = float(kv["r_before.r"]), float(kv["r_after.r"])
    elapsed = runs[0]["elapsed"]
    ok = after <= 0.8 * before and r_after > r_before and elapsed < 600
    record_criterion(
        "C5", ok,
        f"test-split rmse {before:.2f} -> {after:.2f} ms (<= {0.8 * before:.2f}), "
        f"r {r_before:.3f} -> {r_after:.3f}, pipeline {elapsed:.0f}s (<600s)",
    )
    assert ok


def test_c6_determinism(runs, record_criterion):
    same = {k: runs[0][k] == runs[1][k] for k in ("analyze", "eval", "weights")}
    ok = all(same.values())
    record_criterion("C6", ok, "bit-identical across two runs: " + ", ".join(f"{k}={v}" for k, v in same.items()))
    assert ok


def test_c7_round_trips(tmp_path, record_criterion):
    checks = {}
    session = synth.generate(synth.SynthConfig(seed=3, duration_s=900, activity_profile=synth.mixed_profile(900, 300)))

    text = ingest.serialize_ibi(session.watch_ibi)
    checks["csv_ibi"] = ingest.serialize_ibi(ingest.parse_ibi_csv(text)) == text
    text = ingest.serialize_accel(session.accel)
    checks["csv_accel"] = ingest.serialize_accel(ingest.parse_accel_csv(text)) == text

    w = init_weights(5, NormStats(np.array([800.0, 0.1, 40.0]), np.array([90.0, 0.2, 15.0]), -3.0, 12.0))
    blob = save_weights(w)
    back = load_weights(blob)
    checks["weights"] = back == w and save_weights(back) == blob

    paths = synth.export(session, tmp_path)
    checks["synth_export"] = (
        ingest.load_ibi_arrays(paths[0]).records() == session.true_ibi.records()
        and ingest.load_ibi_arrays(paths[1]).records() == session.watch_ibi.records()
        and np.array_equal(ingest.load_accel_arrays(paths[2]).xyz, session.accel.xyz)
        and np.array_equal(ingest.load_accel_arrays(paths[2]).t, session.accel.t)
    )
    ok = all(checks.values())
    record_criterion("C7", ok, "round trips: " + ", ".join(f"{k}={v}" for k, v in checks.items()))
    assert ok
