import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wristhrv import hrv, ingest, synth
from wristhrv.errors import EmptyStream, InsufficientData, InsufficientSamples
from wristhrv.hrv import MovementPoint, RmssdPoint
from wristhrv.ingest import AccelRecord, IbiRecord


def rmssd_oracle(values):
    """Plain loop with exact rational accumulation of the squared differences."""
    total = Fraction(0)
    for a, b in zip(values, values[1:]):
        d = float(b) - float(a)
        total += Fraction(d * d)
    return math.sqrt(float(total) / (len(values) - 1))


def series_oracle(records, window_s=60, step_s=1, min_ibi=30, origin=None):
    """Re-scan the whole stream for every grid instant."""
    first, last = records[0].t, records[-1].t
    origin = first if origin is None else origin
    t = origin
    while t < first:
        t += step_s * 1000
    out = []
    while t <= last:
        inside = [r.ibi for r in records if t - window_s * 1000 < r.t <= t]
        if len(inside) < max(min_ibi, 2):
            out.append(RmssdPoint(t, None, len(inside)))
        else:
            out.append(RmssdPoint(t, rmssd_oracle(inside), len(inside)))
        t += step_s * 1000
    return out


def test_rmssd_constant():
    assert hrv.rmssd_window([800, 800, 800, 800]) == 0.0


def test_rmssd_single_difference():
    assert hrv.rmssd_window([800, 810]) == 10.0


def test_rmssd_hand_value():
    expected = math.sqrt((400 + 900 + 225) / 3)
    assert hrv.rmssd_window([800, 820, 790, 805]) == pytest.approx(22.5462, abs=1e-4)
    assert hrv.rmssd_window([800, 820, 790, 805]) == rmssd_oracle([800, 820, 790, 805]) == expected


def test_rmssd_too_short():
    with pytest.raises(InsufficientSamples):
        hrv.rmssd_window([800])


finite_ibis = st.lists(st.floats(250, 2000, allow_nan=False), min_size=2, max_size=120)


@given(finite_ibis, st.floats(-500, 500, allow_nan=False))
def test_rmssd_translation_invariant(values, c):
    # exact when the shift itself is exact: use integer-valued data
    ints = [round(v) for v in values]
    shift = round(c)
    assert hrv.rmssd_window(ints) == hrv.rmssd_window([v + shift for v in ints])


@given(finite_ibis, st.floats(-10, 10, allow_nan=False).filter(lambda a: abs(a) > 1e-3))
def test_rmssd_scales_linearly(values, a):
    base = hrv.rmssd_window(values)
    assert hrv.rmssd_window([a * v for v in values]) == pytest.approx(abs(a) * base, rel=1e-9, abs=1e-9)


@given(finite_ibis)
def test_rmssd_matches_oracle(values):
    assert hrv.rmssd_window(values) == rmssd_oracle(values)


def _regular(n, ibi=1000.0, start=0):
    return [IbiRecord(start + int(ibi * (i + 1)), ibi) for i in range(n)]


def test_series_regular_beats_all_zero():
    points = hrv.rmssd_series(_regular(60))
    valid = [p for p in points if p.valid]
    assert valid and all(p.value == 0.0 for p in valid)
    # a full window holds 60 beats at 1 s spacing
    assert points[-1].n_ibi == 60


def test_series_dropout_invalidates_windows():
    beats = [r for r in _regular(300) if not 100_000 < r.t <= 140_000]
    points = {p.t: p for p in hrv.rmssd_series(beats)}
    # window (t-60s, t] with t in [140 s, 160 s] holds at most 20 beats
    for t in range(140_000, 160_001, 1000):
        assert not points[t].valid
    assert points[99_000].valid and points[230_000].valid


def test_series_matches_brute_force_on_synthetic_stream():
    session = synth.generate(synth.SynthConfig(seed=5, duration_s=600, activity_profile=[(200, 400, 0.7)]))
    for stream in (session.true_ibi, session.watch_ibi):
        recs = stream.records()
        assert hrv.rmssd_series(recs) == series_oracle(recs)
        assert hrv.rmssd_series(stream, origin=recs[0].t - 337) == series_oracle(recs, origin=recs[0].t - 337)


def test_series_empty():
    with pytest.raises(EmptyStream):
        hrv.rmssd_series([])


def _accel(values, dt=40):
    return [AccelRecord(dt * (i + 1), *v) for i, v in enumerate(values)]


def test_movement_rest_is_zero():
    for z in (1.0, -1.0):
        points = hrv.movement_series(_accel([(0.0, 0.0, z)] * 3000))
        assert points and all(p.value == 0.0 for p in points)


def test_movement_half_and_half():
    # one window holding equal numbers of |a| = 1.0 and |a| = 1.2 samples
    vals = [(0.0, 0.0, 1.0), (0.0, 1.2, 0.0)] * 750
    points = hrv.movement_series(_accel(vals), window_s=60, origin=0)
    full = [p for p in points if p.t == 60_000]
    assert full[0].value == pytest.approx(0.1, abs=1e-12)


def test_movement_drops_empty_windows():
    recs = [AccelRecord(0, 0, 0, 1.2), AccelRecord(200_000, 0, 0, 1.0)]
    points = hrv.movement_series(recs, window_s=60)
    ts = [p.t for p in points]
    assert 0 in ts and 200_000 in ts
    assert not any(60_000 <= t < 200_000 for t in ts)
    assert all(p.value >= 0 for p in points)


def test_movement_empty():
    with pytest.raises(EmptyStream):
        hrv.movement_series([])


def _points(ts, value=40.0):
    return [RmssdPoint(t, value, 50) for t in ts]


def test_align_identity():
    ts = list(range(0, 100_000, 1000))
    a = _points(ts, 40.0)
    b = _points(ts, 30.0)
    m = [MovementPoint(t, 0.1) for t in ts]
    frames = hrv.align(a, b, m)
    assert len(frames) == len(a)
    assert [f.t for f in frames] == ts
    assert all(f.error == 10.0 for f in frames)


@pytest.mark.parametrize("shift, expected", [(200, 100), (500, 100), (501, 0), (700, 0)])
def test_align_skew_tolerance(shift, expected):
    # 5 s grid: a shifted copy's other neighbour is never closer than the shift itself
    ts = list(range(0, 500_000, 5000))
    frames = hrv.align(_points(ts), _points([t + shift for t in ts]), [MovementPoint(t, 0.0) for t in ts])
    assert len(frames) == expected


def test_align_skips_invalid():
    ts = [0, 1000, 2000]
    a = [RmssdPoint(0, None, 3), RmssdPoint(1000, 40.0, 40), RmssdPoint(2000, 41.0, 40)]
    b = [RmssdPoint(0, 30.0, 40), RmssdPoint(1000, None, 2), RmssdPoint(2000, 35.0, 40)]
    frames = hrv.align(a, b, [MovementPoint(t, 0.0) for t in ts])
    assert [f.t for f in frames] == [2000]


def test_align_real_series_properties(short_session):
    a = hrv.rmssd_series(short_session.true_ibi)
    b = hrv.rmssd_series(short_session.watch_ibi, origin=a[0].t)
    m = hrv.movement_series(short_session.accel, origin=a[0].t)
    frames = hrv.align(a, b, m)
    assert 0 < len(frames) <= len(a)
    assert all(f.error + f.rmssd_watch == f.rmssd_ref for f in frames)


def _hr_stream(seed, minutes=10):
    return synth.generate(synth.SynthConfig(seed=seed, duration_s=60 * minutes, jitter_ms=30)).true_ibi


def test_offset_self_is_zero():
    s = _hr_stream(1)
    assert hrv.estimate_clock_offset(s, s) == 0


def test_offset_recovers_shift():
    s = _hr_stream(2)
    shifted = ingest.IbiArrays(s.t + 5000, s.ibi)
    assert hrv.estimate_clock_offset(s, shifted) == -5000
    assert hrv.estimate_clock_offset(shifted, s) == 5000


def _white_stream(seed, minutes=10):
    rng = np.random.default_rng(seed)
    ibi = np.round(850 + 60 * rng.standard_normal(int(minutes * 60 / 0.85)), 3)
    return ingest.IbiArrays(np.cumsum(ibi).round().astype(np.int64), ibi)


def test_offset_independent_streams_low_correlation():
    offset, r = hrv.clock_offset_scan(_white_stream(3), _white_stream(4))
    assert -30_000 <= offset <= 30_000
    assert abs(r) < 0.2


def test_offset_requires_five_minutes():
    with pytest.raises(InsufficientData):
        hrv.estimate_clock_offset(_hr_stream(5, minutes=4), _hr_stream(5, minutes=10))


def test_shift_helpers():
    s = _hr_stream(6, minutes=1)
    assert np.array_equal(hrv.shift_ibi(s, -250).t, s.t - 250)


@given(st.lists(st.tuples(st.floats(0, 2000), st.floats(0, 2000)), min_size=1, max_size=50))
def test_align_error_identity_bit_exact(values):
    ts = [1000 * i for i in range(len(values))]
    a = [RmssdPoint(t, v[0], 40) for t, v in zip(ts, values)]
    b = [RmssdPoint(t, v[1], 40) for t, v in zip(ts, values)]
    frames = hrv.align(a, b, [MovementPoint(t, 0.0) for t in ts])
    assert len(frames) == len(a)
    for f, (ra, rb) in zip(frames, values):
        assert f.error == f.rmssd_ref - f.rmssd_watch
        assert f.error + f.rmssd_watch == f.rmssd_ref
        assert abs(f.rmssd_ref - ra) <= 2**-33 and abs(f.rmssd_watch - rb) <= 2**-33
