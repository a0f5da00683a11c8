"""Sliding-window RMSSD, movement index, clock alignment and error series."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import stats
from .errors import DegenerateVariance, EmptyStream, InsufficientData, InsufficientSamples
from .ingest import AccelArrays, AccelLike, IbiArrays, IbiLike, accel_arrays, ibi_arrays

MS = 1000
GRAVITY_G = 1.0
# aligned RMSSD values are snapped to multiples of 2**-32 ms; below 2**20 ms the
# difference of two such values is exact, so error + watch == ref bit for bit
_SNAP = float(2**32)


@dataclass(frozen=True, slots=True)
class RmssdPoint:
    t: int
    value: float | None  # None marks an invalid (under-covered) window
    n_ibi: int

    @property
    def valid(self) -> bool:
        return self.value is not None


@dataclass(frozen=True, slots=True)
class MovementPoint:
    t: int
    value: float


@dataclass(frozen=True, slots=True)
class AlignedFrame:
    t: int
    rmssd_ref: float
    rmssd_watch: float
    movement: float
    error: float


def rmssd_window(ibis: Sequence[float]) -> float:
    """Root mean square of successive differences, in the units of ``ibis``.

    The sum of squared differences is divided by the number of differences.
    Summation is exact (``math.fsum``), so the result does not depend on
    element order within the sum.
    """
    x = np.asarray(ibis, dtype=np.float64)
    if x.size < 2:
        raise InsufficientSamples(f"need at least 2 intervals, got {x.size}")
    d = np.diff(x)
    return math.sqrt(math.fsum((d * d).tolist()) / d.size)


def _grid(first_t: int, last_t: int, step_ms: int, origin: int | None) -> np.ndarray:
    if origin is None:
        origin = first_t
    k0 = -((origin - first_t) // step_ms)  # ceil((first_t - origin) / step)
    k1 = (last_t - origin) // step_ms
    if k1 < k0:
        return np.empty(0, dtype=np.int64)
    return origin + step_ms * np.arange(k0, k1 + 1, dtype=np.int64)


def rmssd_series(
    stream: IbiLike,
    window_s: int = 60,
    step_s: int = 1,
    min_ibi_per_window: int = 30,
    origin: int | None = None,
) -> list[RmssdPoint]:
    """RMSSD on a regular grid of right-aligned windows ``(t - window, t]``.

    Grid instants are ``origin + k * step`` between the first and last beat;
    ``origin`` defaults to the first beat so callers can share one grid
    across devices by passing the same value.
    """
    cols = ibi_arrays(stream)
    if len(cols) == 0:
        raise EmptyStream("no IBI records")
    ts = cols.t
    grid = _grid(int(ts[0]), int(ts[-1]), step_s * MS, origin)
    lo = np.searchsorted(ts, grid - window_s * MS, side="right")
    hi = np.searchsorted(ts, grid, side="right")
    d = np.diff(cols.ibi)
    sq = (d * d).tolist()
    need = max(min_ibi_per_window, 2)
    out = []
    for t, a, b in zip(grid.tolist(), lo.tolist(), hi.tolist()):
        n = b - a
        if n < need:
            out.append(RmssdPoint(t, None, n))
        else:
            out.append(RmssdPoint(t, math.sqrt(math.fsum(sq[a:b - 1]) / (n - 1)), n))
    return out


def movement_index(xyz: np.ndarray) -> np.ndarray:
    """Per-sample absolute deviation of acceleration magnitude from 1 g."""
    return np.abs(np.sqrt(np.einsum("ij,ij->i", xyz, xyz)) - GRAVITY_G)


def movement_series(
    stream: AccelLike,
    window_s: int = 60,
    step_s: int = 1,
    origin: int | None = None,
) -> list[MovementPoint]:
    """Windowed mean of ``| |a| - 1 g |``; windows without samples are dropped."""
    cols = accel_arrays(stream)
    if len(cols) == 0:
        raise EmptyStream("no accelerometer records")
    ts = cols.t
    grid = _grid(int(ts[0]), int(ts[-1]), step_s * MS, origin)
    lo = np.searchsorted(ts, grid - window_s * MS, side="right")
    hi = np.searchsorted(ts, grid, side="right")
    csum = np.concatenate(([0.0], np.cumsum(movement_index(cols.xyz))))
    count = hi - lo
    keep = count > 0
    value = np.maximum((csum[hi[keep]] - csum[lo[keep]]) / count[keep], 0.0)
    return [MovementPoint(t, v) for t, v in zip(grid[keep].tolist(), value.tolist())]


def nearest_index(src_t: np.ndarray, query: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of the nearest source instant for each query (ties go earlier) and its |skew|."""
    if src_t.size == 0:
        return np.zeros(query.size, dtype=np.int64), np.full(query.size, np.iinfo(np.int64).max)
    right = np.clip(np.searchsorted(src_t, query, side="left"), 0, src_t.size - 1)
    left = np.clip(right - 1, 0, src_t.size - 1)
    d_left = np.abs(query - src_t[left])
    d_right = np.abs(src_t[right] - query)
    idx = np.where(d_left <= d_right, left, right)
    return idx, np.minimum(d_left, d_right)


def align(
    series_a: Sequence[RmssdPoint],
    series_b: Sequence[RmssdPoint],
    movement: Sequence[MovementPoint],
    max_skew_ms: int = 500,
) -> list[AlignedFrame]:
    """Join watch RMSSD and movement onto the reference grid by nearest instant.

    A reference instant yields a frame only when both partners lie within
    ``max_skew_ms`` and both RMSSD values are valid.
    """
    if not series_a:
        return []
    ta = np.array([p.t for p in series_a], dtype=np.int64)
    tb = np.array([p.t for p in series_b], dtype=np.int64)
    tm = np.array([p.t for p in movement], dtype=np.int64)
    ib, skew_b = nearest_index(tb, ta)
    im, skew_m = nearest_index(tm, ta)
    frames = []
    for i, pa in enumerate(series_a):
        if pa.value is None or skew_b[i] > max_skew_ms or skew_m[i] > max_skew_ms:
            continue
        pb = series_b[ib[i]]
        if pb.value is None:
            continue
        ref = round(pa.value * _SNAP) / _SNAP
        watch = round(pb.value * _SNAP) / _SNAP
        frames.append(AlignedFrame(pa.t, ref, watch, movement[im[i]].value, ref - watch))
    return frames


def heart_rate_1hz(stream: IbiLike, grid: np.ndarray) -> np.ndarray:
    """Instantaneous heart rate (bpm) held from the most recent beat at each grid instant.

    Grid instants before the first beat get NaN.
    """
    cols = ibi_arrays(stream)
    idx = np.searchsorted(cols.t, grid, side="right") - 1
    hr = 60000.0 / cols.ibi[np.clip(idx, 0, None)]
    return np.where(idx >= 0, hr, np.nan)


def clock_offset_scan(
    ref_ibi: IbiLike, watch_ibi: IbiLike, search_range_s: int = 30
) -> tuple[int, float]:
    """Return ``(offset_ms, r)``: the shift to add to watch timestamps and its correlation.

    Candidate shifts are whole seconds in ``[-search_range_s, search_range_s]``;
    among equally good shifts the one with smaller magnitude wins (negative
    before positive at equal magnitude).
    """
    ref, watch = ibi_arrays(ref_ibi), ibi_arrays(watch_ibi)
    min_span = 5 * 60 * MS
    for name, s in (("reference", ref), ("watch", watch)):
        if len(s) < 2 or s.t[-1] - s.t[0] < min_span:
            raise InsufficientData(f"{name} stream shorter than 5 minutes")
    grid = _grid(int(ref.t[0]), int(ref.t[-1]), MS, None)
    hr_ref = heart_rate_1hz(ref, grid)
    lags = sorted(range(-search_range_s, search_range_s + 1), key=lambda k: (abs(k), k))
    best_lag, best_r = None, -math.inf
    for lag in lags:
        q = grid - lag * MS
        ok = (q >= watch.t[0]) & (q <= watch.t[-1]) & ~np.isnan(hr_ref)
        if ok.sum() < 60:
            continue
        try:
            r = stats.pearson(hr_ref[ok], heart_rate_1hz(watch, q[ok])).r
        except DegenerateVariance:
            continue
        if r > best_r:
            best_lag, best_r = lag, r
    if best_lag is None:
        raise InsufficientData("streams do not overlap enough to estimate a clock offset")
    return best_lag * MS, best_r


def estimate_clock_offset(ref_ibi: IbiLike, watch_ibi: IbiLike, search_range_s: int = 30) -> int:
    return clock_offset_scan(ref_ibi, watch_ibi, search_range_s)[0]


def shift_ibi(stream: IbiLike, offset_ms: int) -> IbiArrays:
    cols = ibi_arrays(stream)
    return IbiArrays(cols.t + offset_ms, cols.ibi)


def shift_accel(stream: AccelLike, offset_ms: int) -> AccelArrays:
    cols = accel_arrays(stream)
    return AccelArrays(cols.t + offset_ms, cols.xyz)
