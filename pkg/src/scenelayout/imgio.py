"""File formats: binary PPM/PGM images, raw RGB24 dumps, grid JSON.

Luminance heatmaps are written as 16-bit big-endian PGM (P5) so the full
normalized range survives inspection with standard netpbm tools.  Grids
are stored as JSON arrays of arrays, row-major, in 6-decimal fixed
notation for byte-stable output.
"""

from __future__ import annotations

import json

import numpy as np

from .validation import check_luminance_map


def _read_token(data, pos):
    # netpbm headers: tokens separated by whitespace, '#' starts a comment
    while pos < len(data):
        c = data[pos : pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
        else:
            break
    start = pos
    while pos < len(data) and not data[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise ValueError("truncated netpbm header")
    return data[start:pos], pos


def read_ppm(path):
    """Read a binary PPM (P6, maxval 255) image as an (H, W, 3) uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, pos = _read_token(data, 0)
    if magic != b"P6":
        raise ValueError(f"not a binary PPM (P6) file: magic {magic!r}")
    width, pos = _read_token(data, pos)
    height, pos = _read_token(data, pos)
    maxval, pos = _read_token(data, pos)
    width, height, maxval = int(width), int(height), int(maxval)
    if maxval != 255:
        raise ValueError(f"only maxval 255 supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    n = width * height * 3
    raster = data[pos : pos + n]
    if len(raster) != n:
        raise ValueError("PPM raster shorter than header promises")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3)


def write_ppm(path, frame):
    """Write an (H, W, 3) uint8 array as binary PPM (P6)."""
    frame = np.ascontiguousarray(frame, dtype=np.uint8)
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) frame, got {frame.shape}")
    h, w, _ = frame.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(frame.tobytes())


def read_rgb24(path, width, height):
    """Read a raw RGB24 frame dump (no header, row-major, 3 bytes/pixel)."""
    with open(path, "rb") as fh:
        data = fh.read()
    n = width * height * 3
    if len(data) != n:
        raise ValueError(
            f"raw RGB24 file is {len(data)} bytes, expected {n} for {width}x{height}"
        )
    return np.frombuffer(data, dtype=np.uint8).reshape(height, width, 3)


def write_pgm16(path, values):
    """Write a [0, 1] luminance map as a 16-bit big-endian PGM (P5) heatmap."""
    values = check_luminance_map(values)
    if values.min() < 0 or values.max() > 1:
        raise ValueError("heatmap values must lie in [0, 1]")
    h, w = values.shape
    scaled = np.round(values * 65535.0).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(scaled.tobytes())


def read_pgm16(path):
    """Read a 16-bit PGM (P5) heatmap back to a [0, 1] float map."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, pos = _read_token(data, 0)
    if magic != b"P5":
        raise ValueError(f"not a binary PGM (P5) file: magic {magic!r}")
    width, pos = _read_token(data, pos)
    height, pos = _read_token(data, pos)
    maxval, pos = _read_token(data, pos)
    width, height, maxval = int(width), int(height), int(maxval)
    if maxval != 65535:
        raise ValueError(f"expected 16-bit PGM (maxval 65535), got {maxval}")
    pos += 1
    n = width * height * 2
    raster = data[pos : pos + n]
    if len(raster) != n:
        raise ValueError("PGM raster shorter than header promises")
    values = np.frombuffer(raster, dtype=">u2").reshape(height, width)
    return values.astype(np.float64) / 65535.0


def grid_to_json(grid):
    """Serialize a grid as a JSON array of arrays with 6-decimal cells."""
    grid = np.asarray(grid, dtype=np.float64)
    rows = []
    for row in grid:
        rows.append("[" + ", ".join(f"{v:.6f}" for v in row) + "]")
    return "[\n  " + ",\n  ".join(rows) + "\n]\n"


def save_grid_json(path, grid):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(grid_to_json(grid))


def load_grid_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return np.asarray(json.load(fh), dtype=np.float64)
