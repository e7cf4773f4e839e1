"""Binary layer checkpoints.

Layout (all integers little-endian)::

    magic   8 bytes  b"OSEQLYR1"
    version u32
    p       u32
    D       u32
    for each (n, k) with 0 <= k <= n <= D-1, row-major:
        count u32                      number of non-zero coefficients
        count times:
            degree u32
            nbytes u32
            magnitude, nbytes bytes
"""

from __future__ import annotations

import os
import struct
from pathlib import Path
from typing import Optional

import numpy as np

from .engine import Layer, Poly

MAGIC = b"OSEQLYR1"
VERSION = 1
_HEADER = struct.Struct("<8sIII")
_U32 = struct.Struct("<I")
_PAIR = struct.Struct("<II")


class CheckpointError(Exception):
    pass


def _encode_poly(out: bytearray, poly: Poly) -> None:
    if poly is None:
        out += _U32.pack(0)
        return
    lo, coeffs = poly
    nz = [(lo + i, int(c)) for i, c in enumerate(coeffs) if c]
    out += _U32.pack(len(nz))
    for deg, c in nz:
        raw = c.to_bytes((c.bit_length() + 7) // 8, "little")
        out += _PAIR.pack(deg, len(raw))
        out += raw


def save_layer(layer: Layer, path) -> Path:
    """Write ``layer`` atomically (temp file + rename)."""
    path = Path(path)
    out = bytearray(_HEADER.pack(MAGIC, VERSION, layer.p, layer.D))
    for row in layer.rows:
        for poly in row:
            _encode_poly(out, poly)
    tmp = path.with_suffix(path.suffix + ".tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp.write_bytes(out)
        os.replace(tmp, path)
    except OSError as exc:
        raise CheckpointError(f"cannot write checkpoint for layer p={layer.p} to {path}: {exc}") from exc
    return path


def _parse_header(buf: bytes, path) -> tuple[int, int, int]:
    if len(buf) < _HEADER.size:
        raise CheckpointError(f"{path}: file too short for a header")
    magic, version, p, D = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version} (expected {VERSION})")
    if p < 1 or D < 1:
        raise CheckpointError(f"{path}: invalid header p={p}, D={D}")
    return version, p, D


def read_header(path) -> tuple[int, int, int]:
    """``(version, p, D)`` without reading the body."""
    try:
        with open(path, "rb") as fh:
            head = fh.read(_HEADER.size)
    except OSError as exc:
        raise CheckpointError(f"cannot read {path}: {exc}") from exc
    return _parse_header(head, path)


def load_layer(path, expected_D: Optional[int] = None) -> Layer:
    try:
        buf = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read {path}: {exc}") from exc
    _, p, D = _parse_header(buf, path)
    if expected_D is not None and D != expected_D:
        raise CheckpointError(f"{path}: checkpoint is for D={D}, run needs D={expected_D}")
    pos = _HEADER.size
    end = len(buf)
    rows: list[list[Poly]] = []
    try:
        for n in range(D):
            row: list[Poly] = []
            for k in range(n + 1):
                (count,) = _U32.unpack_from(buf, pos)
                pos += 4
                if count == 0:
                    row.append(None)
                    continue
                terms = []
                for _ in range(count):
                    deg, nbytes = _PAIR.unpack_from(buf, pos)
                    pos += 8
                    if pos + nbytes > end:
                        raise CheckpointError(f"{path}: truncated coefficient in entry ({n}, {k})")
                    if deg > D:
                        raise CheckpointError(f"{path}: degree {deg} > D={D} in entry ({n}, {k})")
                    terms.append((deg, int.from_bytes(buf[pos:pos + nbytes], "little")))
                    pos += nbytes
                lo, hi = terms[0][0], terms[-1][0]
                if hi < lo:
                    raise CheckpointError(f"{path}: degrees out of order in entry ({n}, {k})")
                coeffs = np.zeros(hi - lo + 1, dtype=object)
                for deg, c in terms:
                    coeffs[deg - lo] = c
                row.append((lo, coeffs))
            rows.append(row)
    except struct.error as exc:
        raise CheckpointError(f"{path}: truncated layer body (p={p}, D={D})") from exc
    if pos != end:
        raise CheckpointError(f"{path}: {end - pos} unexpected trailing bytes")
    return Layer(p, D, rows)
