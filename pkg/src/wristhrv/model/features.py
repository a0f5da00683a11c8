"""Turn aligned frames into fixed-width training windows.

For a frame at time ``t`` the input covers the 64 one-second instants
``t - 63 s, ..., t``:

* channel 0: watch IBI (ms), zero-order hold of the most recent watch beat;
* channel 1: movement index (g) from the nearest movement point (<= 500 ms away);
* channel 2: watch RMSSD (ms) from the aligned frames themselves.

A frame yields a sample only if all 64 instants are backed by consecutive
aligned frames, a movement point and an earlier watch beat.  Channels and
target are z-normalized with statistics from the temporal training split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import InsufficientHistory
from ..hrv import AlignedFrame, MovementPoint, nearest_index
from ..ingest import IbiLike, ibi_arrays
from .network import N_CHANNELS, WIDTH, NormStats

STEP_MS = 1000
MOVEMENT_SKEW_MS = 500


@dataclass(frozen=True)
class TrainingSample:
    x: np.ndarray  # (3, 64), normalized
    y: float  # target error, ms
    t: int


@dataclass
class SampleSet:
    """Columnar sample storage; indexing yields :class:`TrainingSample`."""

    x: np.ndarray  # (n, 3, 64), normalized
    y: np.ndarray  # (n,), ms
    t: np.ndarray  # (n,), frame timestamps
    rmssd_ref: np.ndarray
    rmssd_watch: np.ndarray
    movement: np.ndarray
    norm: NormStats
    n_train: int

    def __len__(self) -> int:
        return len(self.y)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return self.subset(np.arange(len(self))[i])
        return TrainingSample(self.x[i], float(self.y[i]), int(self.t[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def subset(self, idx) -> "SampleSet":
        idx = np.asarray(idx, dtype=np.int64)
        n_train = int(np.count_nonzero(idx < self.n_train))
        return SampleSet(
            self.x[idx], self.y[idx], self.t[idx], self.rmssd_ref[idx],
            self.rmssd_watch[idx], self.movement[idx], self.norm, n_train,
        )

    @property
    def train(self) -> "SampleSet":
        return self.subset(np.arange(self.n_train))

    @property
    def test(self) -> "SampleSet":
        return self.subset(np.arange(self.n_train, len(self)))


def split_index(n: int, fraction: float) -> int:
    """Number of leading (earliest) samples in the training split."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"split fraction must lie in (0, 1), got {fraction}")
    return int(math.floor(n * fraction))


def _std(values: np.ndarray) -> float:
    s = float(values.std())
    return s if s > 0.0 else 1.0


def fit_norm(x_raw: np.ndarray, y: np.ndarray) -> NormStats:
    """Statistics over all positions of each channel; zero spread maps to 1."""
    x_mean = x_raw.mean(axis=(0, 2))
    x_std = np.array([_std(x_raw[:, c, :]) for c in range(x_raw.shape[1])])
    return NormStats(x_mean, x_std, float(y.mean()), _std(y))


def raw_windows(
    frames: Sequence[AlignedFrame],
    watch_ibi: IbiLike,
    movement: Sequence[MovementPoint],
) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized windows ``(m, 3, 64)`` and the indices of the frames they belong to."""
    n = len(frames)
    ft = np.array([f.t for f in frames], dtype=np.int64)
    if n < WIDTH:
        return np.empty((0, N_CHANNELS, WIDTH)), np.empty(0, dtype=np.int64)

    watch = ibi_arrays(watch_ibi)
    beat = np.searchsorted(watch.t, ft, side="right") - 1
    ibi_ok = beat >= 0
    ibi_at = np.where(ibi_ok, watch.ibi[np.clip(beat, 0, None)], 0.0)

    mt = np.array([m.t for m in movement], dtype=np.int64)
    mv = np.array([m.value for m in movement], dtype=np.float64)
    im, skew = nearest_index(mt, ft)
    mv_ok = skew <= MOVEMENT_SKEW_MS
    mv_at = np.where(mv_ok, mv[im] if mv.size else 0.0, 0.0)

    rw = np.array([f.rmssd_watch for f in frames], dtype=np.float64)

    ends = np.arange(WIDTH - 1, n)
    consecutive = ft[ends] - ft[ends - (WIDTH - 1)] == (WIDTH - 1) * STEP_MS
    ok = ibi_ok & mv_ok
    ok_count = np.concatenate(([0], np.cumsum(ok)))
    covered = ok_count[ends + 1] - ok_count[ends + 1 - WIDTH] == WIDTH
    ends = ends[consecutive & covered]

    chans = np.stack([ibi_at, mv_at, rw])  # (3, n)
    win = sliding_window_view(chans, WIDTH, axis=1)  # (3, n - 63, 64)
    x = win[:, ends - (WIDTH - 1), :].transpose(1, 0, 2).copy()
    return x, ends


def build_samples(
    frames: Sequence[AlignedFrame],
    watch_ibi: IbiLike,
    movement: Sequence[MovementPoint],
    split_fraction: float = 0.8,
    norm: NormStats | None = None,
) -> SampleSet:
    """One normalized sample per frame with a fully covered 64 s history.

    With ``norm=None`` statistics are fitted on the earliest ``split_fraction``
    of the samples; pass stored statistics to reuse a trained model's scaling.
    """
    x_raw, idx = raw_windows(frames, watch_ibi, movement)
    if len(idx) == 0:
        raise InsufficientHistory("no frame has a fully covered 64 s history")
    y = np.array([frames[i].error for i in idx], dtype=np.float64)
    n_train = split_index(len(idx), split_fraction)
    if norm is None:
        if n_train == 0:
            raise InsufficientHistory("training split is empty")
        norm = fit_norm(x_raw[:n_train], y[:n_train])
    x = (x_raw - norm.x_mean[None, :, None]) / norm.x_std[None, :, None]

    def pick(attr):
        return np.array([getattr(frames[i], attr) for i in idx], dtype=np.float64)

    return SampleSet(
        x=x,
        y=y,
        t=np.array([frames[i].t for i in idx], dtype=np.int64),
        rmssd_ref=pick("rmssd_ref"),
        rmssd_watch=pick("rmssd_watch"),
        movement=pick("movement"),
        norm=norm,
        n_train=n_train,
    )
