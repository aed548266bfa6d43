"""Minimal Netpbm PGM reader/writer (P2 ASCII and P5 binary, 8-bit only).

Pixel values are mapped to floats in [0, 255] on read; writing clamps to
that range and rounds half-to-even, so an 8-bit image round-trips
bit-exactly.
"""

from __future__ import annotations

import re

import numpy as np

from .imaging import ImageGrid

__all__ = ["PGMFormatError", "read_pgm", "write_pgm"]


class PGMFormatError(ValueError):
    """Malformed or unsupported PGM data."""


def _tokenize_header(data: bytes):
    """Yield whitespace-separated header tokens, skipping # comments."""
    pos = 0
    while True:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            eol = data.find(b"\n", pos)
            if eol == -1:
                raise PGMFormatError("unterminated comment in header")
            pos = eol + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise PGMFormatError("truncated header")
        yield data[start:pos].decode("ascii", errors="replace"), pos


def read_pgm(path) -> ImageGrid:
    """Read a P2 or P5 PGM file with maxval 255 into an ImageGrid."""
    with open(path, "rb") as f:
        data = f.read()

    tokens = _tokenize_header(data)
    magic, _ = next(tokens)
    if magic not in ("P2", "P5"):
        raise PGMFormatError(f"unsupported magic {magic!r} (want P2 or P5)")
    try:
        width, _ = next(tokens)
        height, _ = next(tokens)
        maxval, after_maxval = next(tokens)
        width, height, maxval = int(width), int(height), int(maxval)
    except (StopIteration, ValueError) as exc:
        raise PGMFormatError("malformed PGM header") from exc
    if width < 1 or height < 1:
        raise PGMFormatError(f"bad dimensions {width}x{height}")
    if maxval != 255:
        raise PGMFormatError(f"only 8-bit PGM supported (maxval 255), got {maxval}")

    n = width * height
    if magic == "P5":
        # exactly one whitespace byte after maxval, then raster
        raster = data[after_maxval + 1 :]
        if len(raster) < n:
            raise PGMFormatError(f"raster truncated: {len(raster)} bytes, expected {n}")
        pixels = np.frombuffer(raster[:n], dtype=np.uint8).astype(float)
    else:
        body = data[after_maxval:]
        body = re.sub(rb"#[^\n]*", b"", body)
        try:
            pixels = np.array([int(t) for t in body.split()], dtype=float)
        except ValueError as exc:
            raise PGMFormatError("non-integer sample in P2 raster") from exc
        if pixels.size != n:
            raise PGMFormatError(f"raster has {pixels.size} samples, expected {n}")
        if np.any(pixels < 0) or np.any(pixels > 255):
            raise PGMFormatError("sample out of range [0, 255]")
    return ImageGrid(pixels.reshape(height, width))


def write_pgm(grid: ImageGrid, path, binary: bool = True):
    """Write an ImageGrid as 8-bit PGM (P5 by default, P2 if binary=False).

    Values are clamped to [0, 255] and rounded half-to-even.
    """
    vals = np.clip(grid.values, 0.0, 255.0)
    pixels = np.rint(vals).astype(np.uint8)
    height, width = pixels.shape
    if binary:
        with open(path, "wb") as f:
            f.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
            f.write(pixels.tobytes())
    else:
        lines = [" ".join(str(v) for v in row) for row in pixels]
        with open(path, "w") as f:
            f.write(f"P2\n{width} {height}\n255\n")
            f.write("\n".join(lines) + "\n")
