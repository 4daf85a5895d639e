"""Binary tensor (RTEN) and Tucker (RTUK) files, and raw-dump ingestion.

Both formats are little-endian with column-major float64 payloads:

    RTEN: b"RTEN" | u8 version=1 | u8 order d | d x u64 dims | data
    RTUK: b"RTUK" | u8 version=1 | u8 order d | d x u64 core dims
          | d x u64 original dims | core data | factor 1 data | ... | factor d data
"""
from __future__ import annotations

import os
import struct
from math import prod
from typing import BinaryIO, Sequence

import numpy as np

from .tensor import TuckerDecomposition

TENSOR_MAGIC = b"RTEN"
TUCKER_MAGIC = b"RTUK"
VERSION = 1
_F64 = np.dtype("<f8")


class FormatError(ValueError):
    """A file does not match the expected layout."""


def _header(magic: bytes, d: int) -> bytes:
    if not 1 <= d <= 255:
        raise ValueError("order must fit in one byte")
    return magic + bytes([VERSION, d])


def _payload(a: np.ndarray) -> bytes:
    return np.asarray(a, dtype=_F64).tobytes(order="F")


def tensor_bytes(t: np.ndarray) -> bytes:
    return _header(TENSOR_MAGIC, t.ndim) + struct.pack(f"<{t.ndim}Q", *t.shape) + _payload(t)


def tucker_bytes(dec: TuckerDecomposition) -> bytes:
    d = dec.ndim
    return b"".join(
        [
            _header(TUCKER_MAGIC, d),
            struct.pack(f"<{d}Q", *dec.core.shape),
            struct.pack(f"<{d}Q", *dec.shape),
            _payload(dec.core),
            *(_payload(f) for f in dec.factors),
        ]
    )


def _write_atomic(path, data: bytes) -> None:
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def write_tensor(path, t: np.ndarray) -> None:
    _write_atomic(path, tensor_bytes(t))


def write_tucker(path, dec: TuckerDecomposition) -> None:
    _write_atomic(path, tucker_bytes(dec))


class _Reader:
    def __init__(self, buf: bytes, what: str):
        self.buf = buf
        self.pos = 0
        self.what = what

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise FormatError(f"truncated {self.what} file")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def header(self, magic: bytes) -> int:
        got = self.take(4)
        if got != magic:
            raise FormatError(f"bad magic {got!r}, expected {magic!r}")
        version, d = self.take(2)
        if version != VERSION:
            raise FormatError(f"unsupported {self.what} version {version}")
        if d < 1:
            raise FormatError("order must be at least 1")
        return d

    def dims(self, d: int) -> tuple[int, ...]:
        dims = struct.unpack(f"<{d}Q", self.take(8 * d))
        if min(dims) < 1:
            raise FormatError("dimensions must be positive")
        return dims

    def array(self, shape) -> np.ndarray:
        count = prod(shape)
        data = np.frombuffer(self.take(8 * count), dtype=_F64)
        return np.reshape(data.astype(np.float64), shape, order="F")

    def done(self) -> None:
        if self.pos != len(self.buf):
            raise FormatError(
                f"{len(self.buf) - self.pos} trailing bytes after {self.what} payload"
            )


def parse_tensor(buf: bytes) -> np.ndarray:
    r = _Reader(buf, "tensor")
    dims = r.dims(r.header(TENSOR_MAGIC))
    t = r.array(dims)
    r.done()
    return t


def parse_tucker(buf: bytes) -> TuckerDecomposition:
    r = _Reader(buf, "Tucker")
    d = r.header(TUCKER_MAGIC)
    core_dims = r.dims(d)
    dims = r.dims(d)
    core = r.array(core_dims)
    factors = [r.array((n, k)) for n, k in zip(dims, core_dims)]
    r.done()
    return TuckerDecomposition(core, factors)


def _read(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def read_tensor(path) -> np.ndarray:
    return parse_tensor(_read(path))


def read_tucker(path) -> TuckerDecomposition:
    return parse_tucker(_read(path))


def peek(path) -> dict:
    """Header summary of an RTEN or RTUK file."""
    with open(path, "rb") as fh:
        head = fh.read(6)
    if head[:4] == TENSOR_MAGIC:
        t = read_tensor(path)
        return {"kind": "tensor", "version": head[4], "dims": list(t.shape)}
    if head[:4] == TUCKER_MAGIC:
        dec = read_tucker(path)
        return {
            "kind": "tucker",
            "version": head[4],
            "dims": list(dec.shape),
            "core_dims": list(dec.core.shape),
        }
    raise FormatError(f"unrecognized magic {head[:4]!r}")


def ingest_raw(
    source: BinaryIO | bytes,
    dims: Sequence[int],
    dtype: str = "f64",
    endian: str = "le",
    layout: str = "F",
) -> np.ndarray:
    """Decode a headerless dump of ``prod(dims)`` floats into a float64 tensor."""
    if dtype not in ("f32", "f64") or endian not in ("le", "be") or layout not in ("F", "C"):
        raise ValueError("dtype must be f32|f64, endian le|be, layout F|C")
    buf = source if isinstance(source, (bytes, bytearray)) else source.read()
    dt = np.dtype(("<" if endian == "le" else ">") + ("f4" if dtype == "f32" else "f8"))
    dims = tuple(int(n) for n in dims)
    expected = prod(dims) * dt.itemsize
    if len(buf) != expected:
        raise FormatError(f"raw file has {len(buf)} bytes, dims {dims} need {expected}")
    data = np.frombuffer(buf, dtype=dt).astype(np.float64)
    return np.asfortranarray(np.reshape(data, dims, order=layout))
