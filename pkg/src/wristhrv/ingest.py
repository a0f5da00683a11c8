"""Device file ingestion: CSV parsing, serialization and IBI artifact cleaning.

Two fixed CSV layouts are supported, both UTF-8 with ``\\n`` line endings,
a period decimal separator and no quoting::

    t_ms,ibi_ms              inter-beat intervals (reference or watch)
    t_ms,ax_g,ay_g,az_g      3-axis accelerometer, units of g

Parsing is line-at-a-time (``iter_*`` generators) so arbitrarily large files
can be consumed without materialising them; ``load_*_arrays`` collect a file
straight into compact numpy columns.
"""

from __future__ import annotations

import enum
import math
import os
from array import array
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

from .errors import EmptyStream, IoFailure, MalformedLine, NonMonotonicTimestamp

IBI_HEADER = "t_ms,ibi_ms"
ACCEL_HEADER = "t_ms,ax_g,ay_g,az_g"

IBI_MIN_MS = 250.0
IBI_MAX_MS = 2000.0
MAX_RELATIVE_JUMP = 0.30


class SourceTag(enum.Enum):
    REFERENCE = "reference"
    WATCH = "watch"


@dataclass(frozen=True, slots=True)
class IbiRecord:
    t: int
    ibi: float


@dataclass(frozen=True, slots=True)
class AccelRecord:
    t: int
    ax: float
    ay: float
    az: float


class IbiStream(list):
    """A list of :class:`IbiRecord` that remembers which device produced it."""

    def __init__(self, records: Iterable[IbiRecord] = (), tag: SourceTag = SourceTag.REFERENCE):
        super().__init__(records)
        self.tag = tag


@dataclass
class IbiArrays:
    """Columnar IBI stream: int64 timestamps and float64 intervals."""

    t: np.ndarray
    ibi: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def records(self) -> list[IbiRecord]:
        return [IbiRecord(t, v) for t, v in zip(self.t.tolist(), self.ibi.tolist())]


@dataclass
class AccelArrays:
    """Columnar accelerometer stream: int64 timestamps, float64 ``(n, 3)`` g values."""

    t: np.ndarray
    xyz: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def records(self) -> list[AccelRecord]:
        return [
            AccelRecord(t, ax, ay, az)
            for t, (ax, ay, az) in zip(self.t.tolist(), self.xyz.tolist())
        ]


IbiLike = Union[Sequence[IbiRecord], IbiArrays]
AccelLike = Union[Sequence[AccelRecord], AccelArrays]


def ibi_arrays(stream: IbiLike) -> IbiArrays:
    if isinstance(stream, IbiArrays):
        return stream
    t = np.fromiter((r.t for r in stream), dtype=np.int64, count=len(stream))
    ibi = np.fromiter((r.ibi for r in stream), dtype=np.float64, count=len(stream))
    return IbiArrays(t, ibi)


def accel_arrays(stream: AccelLike) -> AccelArrays:
    if isinstance(stream, AccelArrays):
        return stream
    n = len(stream)
    t = np.fromiter((r.t for r in stream), dtype=np.int64, count=n)
    xyz = np.empty((n, 3), dtype=np.float64)
    for i, r in enumerate(stream):
        xyz[i] = (r.ax, r.ay, r.az)
    return AccelArrays(t, xyz)


# -- parsing -----------------------------------------------------------------


def _split_rows(lines: Iterable[str], header: str, n_fields: int) -> Iterator[tuple[int, list[str]]]:
    it = iter(lines)
    first = next(it, None)
    if first is None or first.rstrip("\n") != header:
        raise MalformedLine(1, f"expected header {header!r}")
    pending_blank = None
    for line_no, line in enumerate(it, start=2):
        line = line.rstrip("\n")
        if not line:
            # a single trailing newline shows up as one blank line at EOF
            pending_blank = line_no
            continue
        if pending_blank is not None:
            raise MalformedLine(pending_blank, "blank line")
        fields = line.split(",")
        if len(fields) != n_fields:
            raise MalformedLine(line_no, f"expected {n_fields} fields, got {len(fields)}")
        yield line_no, fields


def _parse_t(text: str, line_no: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise MalformedLine(line_no, f"bad timestamp {text!r}") from None


def _parse_real(text: str, line_no: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise MalformedLine(line_no, f"bad number {text!r}") from None
    if not math.isfinite(value):
        raise MalformedLine(line_no, f"non-finite number {text!r}")
    return value


def iter_ibi_csv(lines: Iterable[str]) -> Iterator[IbiRecord]:
    """Yield validated IBI records from text lines (header included)."""
    last_t = None
    for line_no, (t_text, ibi_text) in _split_rows(lines, IBI_HEADER, 2):
        t = _parse_t(t_text, line_no)
        ibi = _parse_real(ibi_text, line_no)
        if ibi <= 0:
            raise MalformedLine(line_no, "ibi must be positive")
        if last_t is not None and t <= last_t:
            raise NonMonotonicTimestamp(line_no)
        last_t = t
        yield IbiRecord(t, ibi)


def iter_accel_csv(lines: Iterable[str]) -> Iterator[AccelRecord]:
    last_t = None
    for line_no, fields in _split_rows(lines, ACCEL_HEADER, 4):
        t = _parse_t(fields[0], line_no)
        ax, ay, az = (_parse_real(f, line_no) for f in fields[1:])
        if last_t is not None and t <= last_t:
            raise NonMonotonicTimestamp(line_no)
        last_t = t
        yield AccelRecord(t, ax, ay, az)


def _text_lines(data: bytes) -> list[str]:
    try:
        return data.decode("utf-8").split("\n")
    except UnicodeDecodeError as exc:
        raise MalformedLine(1, "input is not UTF-8") from exc


def parse_ibi_csv(data: bytes, tag: SourceTag = SourceTag.REFERENCE) -> IbiStream:
    out = IbiStream(iter_ibi_csv(_text_lines(data)), tag=tag)
    if not out:
        raise EmptyStream("no IBI records")
    return out


def parse_accel_csv(data: bytes) -> list[AccelRecord]:
    out = list(iter_accel_csv(_text_lines(data)))
    if not out:
        raise EmptyStream("no accelerometer records")
    return out


def _open_text(path: str | os.PathLike):
    try:
        return open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


def read_ibi_csv(path: str | os.PathLike, tag: SourceTag = SourceTag.REFERENCE) -> IbiStream:
    with _open_text(path) as fh:
        out = IbiStream(iter_ibi_csv(fh), tag=tag)
    if not out:
        raise EmptyStream(f"no IBI records in {path}")
    return out


def load_ibi_arrays(path: str | os.PathLike) -> IbiArrays:
    t, ibi = array("q"), array("d")
    with _open_text(path) as fh:
        for rec in iter_ibi_csv(fh):
            t.append(rec.t)
            ibi.append(rec.ibi)
    if not t:
        raise EmptyStream(f"no IBI records in {path}")
    return IbiArrays(np.frombuffer(t, dtype=np.int64), np.frombuffer(ibi, dtype=np.float64))


def load_accel_arrays(path: str | os.PathLike) -> AccelArrays:
    """Stream an accelerometer file into compact columns (~32 bytes per sample)."""
    t, xyz = array("q"), array("d")
    with _open_text(path) as fh:
        for rec in iter_accel_csv(fh):
            t.append(rec.t)
            xyz.extend((rec.ax, rec.ay, rec.az))
    if not t:
        raise EmptyStream(f"no accelerometer records in {path}")
    # the arrays keep their buffers alive; no copy needed
    return AccelArrays(np.frombuffer(t, dtype=np.int64), np.frombuffer(xyz, dtype=np.float64).reshape(-1, 3))


# -- serialization -----------------------------------------------------------


def _ibi_lines(stream: IbiLike, chunk: int = 65536) -> Iterator[str]:
    cols = ibi_arrays(stream)
    yield IBI_HEADER + "\n"
    for lo in range(0, len(cols), chunk):
        ts = cols.t[lo:lo + chunk].tolist()
        vs = cols.ibi[lo:lo + chunk].tolist()
        yield "".join(f"{t},{v!r}\n" for t, v in zip(ts, vs))


def _accel_lines(stream: AccelLike, chunk: int = 65536) -> Iterator[str]:
    cols = accel_arrays(stream)
    yield ACCEL_HEADER + "\n"
    for lo in range(0, len(cols), chunk):
        ts = cols.t[lo:lo + chunk].tolist()
        vs = cols.xyz[lo:lo + chunk].tolist()
        yield "".join(f"{t},{x!r},{y!r},{z!r}\n" for t, (x, y, z) in zip(ts, vs))


def serialize_ibi(stream: IbiLike) -> bytes:
    return "".join(_ibi_lines(stream)).encode("utf-8")


def serialize_accel(stream: AccelLike) -> bytes:
    return "".join(_accel_lines(stream)).encode("utf-8")


def _write_lines(path: str | os.PathLike, chunks: Iterable[str]) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for chunk in chunks:
                fh.write(chunk)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def write_ibi_csv(path: str | os.PathLike, stream: IbiLike) -> None:
    _write_lines(path, _ibi_lines(stream))


def write_accel_csv(path: str | os.PathLike, stream: AccelLike) -> None:
    _write_lines(path, _accel_lines(stream))


# -- cleaning ----------------------------------------------------------------


def clean_mask(ibi: np.ndarray) -> np.ndarray:
    """Boolean keep-mask implementing the range and relative-jump rule.

    A value is kept if it lies in ``[IBI_MIN_MS, IBI_MAX_MS]`` and differs
    from the previously *kept* value by at most 30 % of that value.
    """
    keep = np.zeros(len(ibi), dtype=bool)
    prev = None
    for i, v in enumerate(ibi.tolist()):
        if not IBI_MIN_MS <= v <= IBI_MAX_MS:
            continue
        if prev is not None and abs(v - prev) > MAX_RELATIVE_JUMP * prev:
            continue
        keep[i] = True
        prev = v
    return keep


def clean_ibi(records: Sequence[IbiRecord]) -> tuple[list[IbiRecord], int]:
    """Drop implausible intervals; returns ``(kept, rejected_count)``.

    Rejected beats are removed, never interpolated.
    """
    mask = clean_mask(np.fromiter((r.ibi for r in records), dtype=np.float64, count=len(records)))
    kept = [r for r, k in zip(records, mask.tolist()) if k]
    if isinstance(records, IbiStream):
        kept = IbiStream(kept, tag=records.tag)
    return kept, len(records) - len(kept)


def clean_ibi_arrays(stream: IbiArrays) -> tuple[IbiArrays, int]:
    mask = clean_mask(stream.ibi)
    return IbiArrays(stream.t[mask], stream.ibi[mask]), int(len(mask) - mask.sum())
