"""Deterministic synthetic wearer: reference IBIs, a motion-corrupted watch copy, 25 Hz accelerometer.

Randomness comes from numpy's PCG64 bit generator seeded through a
``SeedSequence``; each component (beats, watch corruption, accelerometer)
draws from its own spawned child stream so changing one never perturbs
another.  Gaussian draws use numpy's ``standard_normal`` transform of those
uniform bits, which is fixed for a given numpy release.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidConfig, IoFailure
from .ingest import AccelArrays, IbiArrays, write_accel_csv, write_ibi_csv

ACCEL_HZ = 25
ACCEL_PERIOD_MS = 1000 // ACCEL_HZ
IBI_CLAMP_MS = (300.0, 1800.0)
STEP_FREQ_HZ = 1.8
STEP_AMP_G = 0.6
ACCEL_NOISE_G = 0.005

# intensity cycle used by the "mixed" profile, one entry per segment
MIXED_CYCLE = (0.0, 0.3, 0.7, 0.0, 0.9, 0.45, 0.15, 0.6, 0.0, 0.8)


@dataclass
class SynthConfig:
    seed: int
    duration_s: int
    mean_ibi_ms: float = 850.0
    rsa_amp_ms: float = 40.0
    rsa_freq_hz: float = 0.25
    jitter_ms: float = 15.0
    activity_profile: list[tuple[float, float, float]] = field(default_factory=list)
    corruption_noise_ms_per_intensity: float = 120.0
    dropout_prob_per_intensity: float = 0.3
    start_ms: int = 0

    def validate(self) -> None:
        if self.duration_s <= 0:
            raise InvalidConfig("duration_s must be positive")
        if self.mean_ibi_ms <= 0 or self.jitter_ms < 0 or self.rsa_amp_ms < 0:
            raise InvalidConfig("IBI model parameters out of range")
        if self.corruption_noise_ms_per_intensity < 0:
            raise InvalidConfig("corruption noise must be non-negative")
        if not 0.0 <= self.dropout_prob_per_intensity <= 1.0:
            raise InvalidConfig("dropout probability must lie in [0, 1]")
        segs = sorted(self.activity_profile)
        for start, end, level in segs:
            if not start < end:
                raise InvalidConfig(f"segment ({start}, {end}) is empty")
            if not 0.0 <= level <= 1.0:
                raise InvalidConfig(f"intensity {level} outside [0, 1]")
        for (_, end, _), (start, _, _) in zip(segs, segs[1:]):
            if start < end:
                raise InvalidConfig("activity segments overlap")


@dataclass
class SynthSession:
    true_ibi: IbiArrays
    watch_ibi: IbiArrays
    accel: AccelArrays


def mixed_profile(duration_s: int, segment_s: int = 600) -> list[tuple[float, float, float]]:
    """Alternating rest/activity blocks cycling through :data:`MIXED_CYCLE`."""
    out = []
    for i, start in enumerate(range(0, duration_s, segment_s)):
        out.append((float(start), float(min(start + segment_s, duration_s)), MIXED_CYCLE[i % len(MIXED_CYCLE)]))
    return out


def parse_profile(text: str, duration_s: int) -> list[tuple[float, float, float]]:
    """``mixed``, ``rest`` or ``start:end:intensity[,start:end:intensity...]`` (seconds)."""
    text = text.strip()
    if text == "mixed":
        return mixed_profile(duration_s)
    if text == "rest":
        return []
    segs = []
    for part in text.split(","):
        try:
            start, end, level = (float(v) for v in part.split(":"))
        except ValueError:
            raise InvalidConfig(f"bad profile segment {part!r}") from None
        segs.append((start, end, level))
    return segs


def intensity_at(profile: list[tuple[float, float, float]], t_s: np.ndarray) -> np.ndarray:
    """Activity intensity at each time (seconds from session start); 0 outside segments."""
    out = np.zeros(np.shape(t_s), dtype=np.float64)
    for start, end, level in profile:
        out[(t_s >= start) & (t_s < end)] = level
    return out


def _true_beats(cfg: SynthConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    duration_ms = cfg.duration_s * 1000.0
    max_beats = int(duration_ms // IBI_CLAMP_MS[0]) + 2
    jitter = rng.standard_normal(max_beats).tolist()
    lo, hi = IBI_CLAMP_MS
    w = 2.0 * math.pi * cfg.rsa_freq_hz
    ts, ibis = [], []
    now = 0.0
    for z in jitter:
        ibi = cfg.mean_ibi_ms + cfg.rsa_amp_ms * math.sin(w * now / 1000.0) + cfg.jitter_ms * z
        ibi = round(min(hi, max(lo, ibi)), 3)
        now += ibi
        if now > duration_ms:
            break
        ts.append(round(now))
        ibis.append(ibi)
    return np.array(ts, dtype=np.int64), np.array(ibis, dtype=np.float64)


def _watch_beats(cfg, t_rel, ibi, rng):
    level = intensity_at(cfg.activity_profile, t_rel / 1000.0)
    noise = rng.standard_normal(t_rel.size)
    drop = rng.random(t_rel.size)
    noisy = ibi + (cfg.corruption_noise_ms_per_intensity * level) * noise
    noisy = np.maximum(np.round(noisy, 3), 1.0)
    keep = drop >= cfg.dropout_prob_per_intensity * level
    return keep, noisy


def _accel(cfg: SynthConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    n = cfg.duration_s * ACCEL_HZ + 1
    t_rel = np.arange(n, dtype=np.int64) * ACCEL_PERIOD_MS
    t_s = t_rel / 1000.0
    level = intensity_at(cfg.activity_profile, t_s)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    magnitude = 1.0 + STEP_AMP_G * level * np.sin(2.0 * math.pi * STEP_FREQ_HZ * t_s + phase)
    # slowly wandering wrist orientation; magnitude is orientation-free
    tilt = 0.4 * np.sin(2.0 * math.pi * t_s / 300.0)
    yaw = 2.0 * math.pi * t_s / 900.0
    direction = np.stack(
        [np.sin(tilt) * np.cos(yaw), np.sin(tilt) * np.sin(yaw), np.cos(tilt)], axis=1
    )
    xyz = magnitude[:, None] * direction + ACCEL_NOISE_G * rng.standard_normal((n, 3))
    return t_rel, np.round(xyz, 6)


def generate(config: SynthConfig) -> SynthSession:
    """Build one synthetic session; identical configs give bit-identical sessions."""
    config.validate()
    beat_ss, watch_ss, accel_ss = np.random.SeedSequence(config.seed).spawn(3)
    t_rel, ibi = _true_beats(config, np.random.Generator(np.random.PCG64(beat_ss)))
    keep, noisy = _watch_beats(config, t_rel, ibi, np.random.Generator(np.random.PCG64(watch_ss)))
    accel_t, xyz = _accel(config, np.random.Generator(np.random.PCG64(accel_ss)))
    start = config.start_ms
    return SynthSession(
        true_ibi=IbiArrays(t_rel + start, ibi),
        watch_ibi=IbiArrays(t_rel[keep] + start, noisy[keep]),
        accel=AccelArrays(accel_t + start, xyz),
    )


REF_FILE = "ref_ibi.csv"
WATCH_FILE = "watch_ibi.csv"
ACCEL_FILE = "accel.csv"


def export(session: SynthSession, directory: str | os.PathLike) -> tuple[Path, Path, Path]:
    """Write the session as ``ref_ibi.csv``, ``watch_ibi.csv`` and ``accel.csv``."""
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out}: {exc}") from exc
    paths = (out / REF_FILE, out / WATCH_FILE, out / ACCEL_FILE)
    write_ibi_csv(paths[0], session.true_ibi)
    write_ibi_csv(paths[1], session.watch_ibi)
    write_accel_csv(paths[2], session.accel)
    return paths
