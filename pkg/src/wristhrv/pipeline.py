"""End-to-end experiment stages shared by the CLI: prepare, analyze, evaluate, plot export."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, fields
from typing import Iterable

import numpy as np

from . import hrv, ingest, stats
from .errors import DegenerateVariance, InsufficientData, LengthMismatch
from .model import ModelWeights, SampleSet, build_samples, correct, forward

log = logging.getLogger(__name__)

MIN_FRAMES = 100


@dataclass
class Prepared:
    """Cleaned, clock-corrected streams and everything derived from them."""

    ref_ibi: ingest.IbiArrays
    watch_ibi: ingest.IbiArrays
    accel: ingest.AccelArrays
    rejected_ref: int
    rejected_watch: int
    clock_offset_ms: int
    rmssd_ref: list[hrv.RmssdPoint]
    rmssd_watch: list[hrv.RmssdPoint]
    movement: list[hrv.MovementPoint]
    frames: list[hrv.AlignedFrame]


def prepare(
    ref_path: str | os.PathLike,
    watch_path: str | os.PathLike,
    accel_path: str | os.PathLike,
    clock_offset: str | int = "auto",
) -> Prepared:
    """Ingest and clean the three files, correct the watch clock and build aligned frames.

    ``clock_offset`` is ``"auto"`` (estimate from heart rate), ``"none"`` or
    a fixed number of milliseconds added to watch and accelerometer times.
    """
    ref, rej_ref = ingest.clean_ibi_arrays(ingest.load_ibi_arrays(ref_path))
    watch, rej_watch = ingest.clean_ibi_arrays(ingest.load_ibi_arrays(watch_path))
    accel = ingest.load_accel_arrays(accel_path)
    if len(ref) == 0 or len(watch) == 0:
        raise InsufficientData("no IBI records survived cleaning")

    if clock_offset == "auto":
        try:
            offset, r = hrv.clock_offset_scan(ref, watch)
            log.info("estimated clock offset %d ms (r=%.3f)", offset, r)
            if r < 0.1:
                log.warning("weak heart-rate correlation (r=%.3f); clock offset may be unreliable", r)
        except InsufficientData as exc:
            log.warning("clock offset not estimated: %s", exc)
            offset = 0
    elif clock_offset == "none":
        offset = 0
    else:
        offset = int(clock_offset)
    watch = hrv.shift_ibi(watch, offset)
    accel = hrv.shift_accel(accel, offset)

    origin = int(ref.t[0])
    series_ref = hrv.rmssd_series(ref, origin=origin)
    series_watch = hrv.rmssd_series(watch, origin=origin)
    movement = hrv.movement_series(accel, origin=origin)
    frames = hrv.align(series_ref, series_watch, movement)
    return Prepared(ref, watch, accel, rej_ref, rej_watch, offset, series_ref, series_watch, movement, frames)


def _corr_or_none(x, y) -> stats.CorrelationResult | None:
    try:
        return stats.pearson(x, y)
    except (DegenerateVariance, LengthMismatch):
        return None


@dataclass
class AnalysisReport:
    n_frames: int
    rmse_before: float
    r_before: stats.CorrelationResult | None
    movement_error_corr: stats.CorrelationResult | None  # movement vs |error|
    movement_signed_error_corr: stats.CorrelationResult | None
    clock_offset_ms: int
    rejected_ref: int
    rejected_watch: int


def movement_error_correlations(movement, error):
    """Correlation of movement with error magnitude, and with the signed error."""
    error = np.asarray(error, dtype=np.float64)
    return _corr_or_none(movement, np.abs(error)), _corr_or_none(movement, error)


def analyze(prep: Prepared, min_frames: int = MIN_FRAMES) -> AnalysisReport:
    frames = prep.frames
    if len(frames) < min_frames:
        raise InsufficientData(f"only {len(frames)} valid aligned frames (need {min_frames})")
    ref = np.array([f.rmssd_ref for f in frames])
    watch = np.array([f.rmssd_watch for f in frames])
    mv = np.array([f.movement for f in frames])
    err = np.array([f.error for f in frames])
    abs_corr, signed_corr = movement_error_correlations(mv, err)
    return AnalysisReport(
        n_frames=len(frames),
        rmse_before=stats.rmse(ref, watch),
        r_before=_corr_or_none(ref, watch),
        movement_error_corr=abs_corr,
        movement_signed_error_corr=signed_corr,
        clock_offset_ms=prep.clock_offset_ms,
        rejected_ref=prep.rejected_ref,
        rejected_watch=prep.rejected_watch,
    )


def samples_for(prep: Prepared, split_fraction: float = 0.8, weights: ModelWeights | None = None) -> SampleSet:
    norm = weights.norm if weights is not None else None
    return build_samples(prep.frames, prep.watch_ibi, prep.movement, split_fraction, norm)


@dataclass
class EvalReport:
    rmse_before: float
    rmse_after: float
    r_before: stats.CorrelationResult | None
    r_after: stats.CorrelationResult | None
    movement_error_corr: stats.CorrelationResult | None  # movement vs |error|
    n_frames: int
    movement_signed_error_corr: stats.CorrelationResult | None = None
    test_start_t: int = 0


@dataclass
class Adjusted:
    samples: SampleSet
    predicted_error: np.ndarray
    adjusted: np.ndarray


def adjust(weights: ModelWeights, samples: SampleSet) -> Adjusted:
    weights.check_shapes()
    pred = forward(weights, samples.x) if len(samples) else np.empty(0)
    return Adjusted(samples, pred, correct(samples.rmssd_watch, pred) if len(samples) else np.empty(0))


def evaluate(prep: Prepared, weights: ModelWeights, split_fraction: float = 0.8) -> EvalReport:
    """Score raw and adjusted watch RMSSD against the reference on the test split."""
    weights.check_shapes()
    test = samples_for(prep, split_fraction, weights).test
    if len(test) == 0:
        raise InsufficientData("test split is empty")
    adj = adjust(weights, test)
    abs_corr, signed_corr = movement_error_correlations(test.movement, test.y)
    return EvalReport(
        rmse_before=stats.rmse(test.rmssd_ref, test.rmssd_watch),
        rmse_after=stats.rmse(test.rmssd_ref, adj.adjusted),
        r_before=_corr_or_none(test.rmssd_ref, test.rmssd_watch),
        r_after=_corr_or_none(test.rmssd_ref, adj.adjusted),
        movement_error_corr=abs_corr,
        n_frames=len(test),
        movement_signed_error_corr=signed_corr,
        test_start_t=int(test.t[0]),
    )


# -- report formatting ---------------------------------------------------------


def _kv(key: str, value) -> Iterable[tuple[str, str]]:
    if isinstance(value, stats.CorrelationResult):
        yield f"{key}.r", repr(value.r)
        yield f"{key}.p", repr(value.p_two_sided)
        yield f"{key}.t", repr(value.t_stat)
        yield f"{key}.n", str(value.n)
    elif value is None:
        yield key, "DegenerateVariance"
    elif isinstance(value, float):
        yield key, repr(value)
    else:
        yield key, str(value)


def report_lines(report) -> list[str]:
    """``key=value`` lines; floats use ``repr`` so files diff bit-exactly."""
    return [f"{k}={v}" for f in fields(report) for k, v in _kv(f.name, getattr(report, f.name))]


def parse_report(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if line and not line.startswith("#"):
            key, _, value = line.partition("=")
            out[key] = value
    return out


# -- plot export ----------------------------------------------------------------


def ema(values, alpha: float) -> np.ndarray:
    """Exponential moving average ``s_k = alpha * v_k + (1 - alpha) * s_{k-1}``, ``s_0 = v_0``."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    v = np.asarray(values, dtype=np.float64)
    out = np.empty_like(v)
    if v.size == 0:
        return out
    s = float(v[0])
    out[0] = s
    for k, x in enumerate(v[1:].tolist(), start=1):
        # incremental form keeps constant runs exactly constant
        s += alpha * (x - s)
        out[k] = s
    return out


PLOT_COLUMNS = ("rmssd_ref", "rmssd_watch_raw", "rmssd_watch_adjusted", "movement")


def plot_series_csv(weights: ModelWeights, prep: Prepared, alpha: float = 0.05, split_fraction: float = 0.8) -> str:
    """Raw and EMA-smoothed series on the shared frame grid, train and test rows alike."""
    samples = samples_for(prep, split_fraction, weights)
    adj = adjust(weights, samples)
    raw = {
        "rmssd_ref": samples.rmssd_ref,
        "rmssd_watch_raw": samples.rmssd_watch,
        "rmssd_watch_adjusted": adj.adjusted,
        "movement": samples.movement,
    }
    smooth = {k: ema(v, alpha) for k, v in raw.items()}
    test_start = int(samples.t[samples.n_train]) if samples.n_train < len(samples) else None
    lines = [
        f"# ema_alpha={alpha!r}",
        f"# test_start_t={test_start}",
        "t,split," + ",".join(PLOT_COLUMNS) + "," + ",".join(c + "_ema" for c in PLOT_COLUMNS),
    ]
    cols = [raw[c].tolist() for c in PLOT_COLUMNS] + [smooth[c].tolist() for c in PLOT_COLUMNS]
    for i, t in enumerate(samples.t.tolist()):
        split = "train" if i < samples.n_train else "test"
        lines.append(f"{t},{split}," + ",".join(repr(c[i]) for c in cols))
    return "\n".join(lines) + "\n"
