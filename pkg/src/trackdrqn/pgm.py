"""Binary PGM (P5) reading and writing, atomic per file."""

from __future__ import annotations

import os
import tempfile

import numpy as np

__all__ = ["write_pgm", "read_pgm"]


def write_pgm(path, pixels: np.ndarray) -> None:
    """Write a (H, W) uint8 array as binary PGM. The file appears atomically."""
    px = np.asarray(pixels)
    if px.dtype != np.uint8 or px.ndim != 2:
        raise ValueError(f"expected a 2-D uint8 array, got {px.dtype} {px.shape}")
    h, w = px.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(px.tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    # header: magic, width, height, maxval, then raw bytes; comments allowed
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    magic, w, h, maxval = fields[0], int(fields[1]), int(fields[2]), int(fields[3])
    if magic != b"P5" or maxval != 255:
        raise ValueError(f"not an 8-bit binary PGM: magic={magic!r}, maxval={maxval}")
    px = np.frombuffer(data, dtype=np.uint8, count=w * h, offset=pos)
    return px.reshape(h, w).copy()
