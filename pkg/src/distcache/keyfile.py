"""Binary key files shared by ``genkeys`` and ``sortbench``.

Layout, all little-endian::

    8 bytes   magic b"RRKEYS01"
    uint16    exponent bits e
    uint16    mantissa bits m
    uint32    reserved (zero)
    uint64    key count n
    n words   IEEE keys, 4 or 8 bytes each depending on the format
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .msb_radix_float import FloatFormat

MAGIC = b"RRKEYS01"
_HEADER = struct.Struct("<8sHHIQ")


class KeyFileError(ValueError):
    pass


def write_keys(path, data, fmt: FloatFormat | None = None) -> None:
    data = np.asarray(data)
    if fmt is None:
        fmt = FloatFormat.of(data.dtype)
    words = np.ascontiguousarray(data, dtype=np.dtype(fmt.dtype).newbyteorder("<"))
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, fmt.e, fmt.m, 0, words.size))
        fh.write(words.tobytes())


def read_keys(path) -> tuple[np.ndarray, FloatFormat]:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise KeyFileError(f"{path}: truncated header")
    magic, e, m, _, n = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise KeyFileError(f"{path}: bad magic {magic!r}")
    try:
        fmt = FloatFormat(e, m)
    except ValueError as exc:
        raise KeyFileError(f"{path}: {exc}") from exc
    dt = np.dtype(fmt.dtype).newbyteorder("<")
    body = raw[_HEADER.size:]
    if len(body) != n * dt.itemsize:
        raise KeyFileError(f"{path}: header says {n} keys, body holds {len(body) // dt.itemsize}")
    return np.frombuffer(body, dtype=dt).astype(fmt.dtype), fmt
