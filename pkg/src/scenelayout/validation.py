"""Input validation helpers shared across the package."""

from __future__ import annotations

import zlib

import numpy as np


def check_rgb_frame(frame):
    """Validate an (H, W, 3) uint8 sRGB frame and return it as ndarray."""
    frame = np.asarray(frame)
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError(f"expected frame of shape (H, W, 3), got {frame.shape}")
    if frame.dtype != np.uint8:
        if np.issubdtype(frame.dtype, np.integer):
            if frame.min() < 0 or frame.max() > 255:
                raise ValueError("sRGB components must lie in [0, 255]")
            frame = frame.astype(np.uint8)
        else:
            raise ValueError(f"expected uint8 components, got dtype {frame.dtype}")
    return frame


def check_luminance_map(values):
    """Validate a 2-D float luminance map."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError(f"expected 2-D luminance map, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("luminance map contains non-finite values")
    return values


def check_grid(grid):
    """Validate a square luminance grid with values in [0, 1]."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 2 or grid.shape[0] != grid.shape[1]:
        raise ValueError(f"expected square grid, got shape {grid.shape}")
    if grid.shape[0] < 2:
        raise ValueError("grid side length must be >= 2")
    if grid.min() < -1e-12 or grid.max() > 1 + 1e-12:
        raise ValueError("grid values must lie in [0, 1]")
    return grid


def check_positions(positions, n_g, name="positions"):
    """Validate an (N, 2) integer array of (x, y) cell coordinates."""
    positions = np.asarray(positions)
    if positions.ndim != 2 or positions.shape[1] != 2:
        raise ValueError(f"{name} must have shape (N, 2), got {positions.shape}")
    if not np.issubdtype(positions.dtype, np.integer):
        if not np.allclose(positions, np.round(positions)):
            raise ValueError(f"{name} must be integer cell coordinates")
        positions = np.round(positions).astype(np.int64)
    if positions.min() < 0 or positions.max() >= n_g:
        raise ValueError(f"{name} must lie inside the {n_g}x{n_g} grid")
    return positions.astype(np.int64)


def check_epoch(epoch):
    """Validate a (C, T) finite float signal array."""
    epoch = np.asarray(epoch, dtype=np.float64)
    if epoch.ndim != 2:
        raise ValueError(f"expected epoch of shape (C, T), got {epoch.shape}")
    if epoch.shape[1] == 0:
        raise ValueError("epoch has no samples")
    if not np.all(np.isfinite(epoch)):
        raise ValueError("epoch contains non-finite values")
    return epoch


def named_rng(seed, name):
    """Derive a module-specific Generator from one top-level seed.

    The name is folded in through crc32 so every subsystem gets an
    independent, reproducible stream from a single ``--seed`` value.
    """
    return np.random.default_rng(
        np.random.SeedSequence((int(seed), zlib.crc32(name.encode("utf-8"))))
    )
