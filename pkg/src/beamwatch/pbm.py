"""Binary portable bitmap (P4) reading and writing. Bit 1 is foreground."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import Mask
from .errors import BeamwatchError


class PBMError(BeamwatchError):
    pass


def encode_pbm(mask: Mask) -> bytes:
    header = f"P4\n{mask.width} {mask.height}\n".encode("ascii")
    return header + np.packbits(mask.bits, axis=1).tobytes()


def decode_pbm(data: bytes) -> Mask:
    fields, pos = [], 0
    while len(fields) < 3:
        # skip whitespace and comments between header tokens
        while pos < len(data) and (data[pos:pos + 1].isspace() or data[pos:pos + 1] == b"#"):
            if data[pos:pos + 1] == b"#":
                end = data.find(b"\n", pos)
                pos = len(data) if end < 0 else end + 1
            else:
                pos += 1
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise PBMError("truncated header")
        fields.append(data[start:pos])
    if fields[0] != b"P4":
        raise PBMError(f"not a binary PBM (magic {fields[0]!r})")
    try:
        width, height = int(fields[1]), int(fields[2])
    except ValueError as exc:
        raise PBMError("bad dimensions") from exc
    pos += 1  # single whitespace byte after height
    row_bytes = (width + 7) // 8
    payload = data[pos:pos + row_bytes * height]
    if len(payload) != row_bytes * height:
        raise PBMError("truncated raster")
    packed = np.frombuffer(payload, dtype=np.uint8).reshape(height, row_bytes)
    bits = np.unpackbits(packed, axis=1, count=width).astype(bool)
    return Mask.from_array(bits)


def write_pbm(path: str | Path, mask: Mask) -> None:
    Path(path).write_bytes(encode_pbm(mask))


def read_pbm(path: str | Path) -> Mask:
    return decode_pbm(Path(path).read_bytes())
