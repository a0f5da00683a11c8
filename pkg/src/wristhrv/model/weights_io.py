"""Binary weight file format.

Layout (all integers little-endian)::

    magic      4 bytes  b"WHRV"
    version    u8       FORMAT_VERSION
    crc32      u32      over every byte that follows
    count      u32      number of tensors
    per tensor:
        name_len u16, name (utf-8), ndim u8, dims u32 * ndim,
        data     float64 little-endian, C order

Normalization statistics travel as four extra tensors named ``norm.*``.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from ..errors import CorruptFile, VersionMismatch
from .network import PARAM_SHAPES, ModelWeights, NormStats

MAGIC = b"WHRV"
FORMAT_VERSION = 1
_HEAD = struct.Struct("<4sBI")


def _tensors(w: ModelWeights):
    yield from w.params.items()
    yield "norm.x_mean", w.norm.x_mean
    yield "norm.x_std", w.norm.x_std
    yield "norm.y_mean", np.array([w.norm.y_mean])
    yield "norm.y_std", np.array([w.norm.y_std])


def save_weights(w: ModelWeights) -> bytes:
    body = bytearray()
    items = list(_tensors(w))
    body += struct.pack("<I", len(items))
    for name, arr in items:
        raw = name.encode("utf-8")
        arr = np.ascontiguousarray(arr, dtype="<f8")
        body += struct.pack("<H", len(raw)) + raw
        body += struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
        body += arr.tobytes()
    return _HEAD.pack(MAGIC, FORMAT_VERSION, zlib.crc32(body)) + bytes(body)


class _Reader:
    def __init__(self, buf: bytes, pos: int):
        self.buf, self.pos = buf, pos

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CorruptFile("weight file truncated")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_weights(data: bytes) -> ModelWeights:
    if len(data) < _HEAD.size:
        raise CorruptFile("weight file truncated")
    magic, version, crc = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise CorruptFile("not a weight file (bad magic)")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"weight file version {version}, expected {FORMAT_VERSION}")
    body = data[_HEAD.size:]
    rd = _Reader(body, 0)
    (count,) = rd.unpack("<I")
    tensors = {}
    for _ in range(count):
        (name_len,) = rd.unpack("<H")
        try:
            name = rd.take(name_len).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptFile("bad tensor name") from exc
        (ndim,) = rd.unpack("<B")
        shape = rd.unpack(f"<{ndim}I")
        size = int(np.prod(shape)) if ndim else 1
        tensors[name] = np.frombuffer(rd.take(8 * size), dtype="<f8").reshape(shape).astype(np.float64)
    if rd.pos != len(body):
        raise CorruptFile("trailing bytes after last tensor")
    if zlib.crc32(body) != crc:
        raise CorruptFile("checksum mismatch")
    try:
        norm = NormStats(
            tensors.pop("norm.x_mean"),
            tensors.pop("norm.x_std"),
            float(tensors.pop("norm.y_mean")[0]),
            float(tensors.pop("norm.y_std")[0]),
        )
    except (KeyError, IndexError) as exc:
        raise CorruptFile("normalization statistics missing") from exc
    # order follows the architecture when names match; shape checks are the caller's
    if set(tensors) == set(PARAM_SHAPES):
        tensors = {k: tensors[k] for k in PARAM_SHAPES}
    return ModelWeights(tensors, norm)
