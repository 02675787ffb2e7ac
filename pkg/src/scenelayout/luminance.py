"""Perceptual luminance estimation from sRGB frames.

The pipeline has four stages: gamma linearization, transformation to the
CIE 1931 XYZ space, extraction of the Y (luminance) channel, and min-max
normalization to [0, 1].  Clip-level maps are per-pixel averages over the
frames of a short video clip, and the final scene context is an
``n_g x n_g`` grid of cell-mean luminances.

Frames are numpy arrays of shape (height, width, 3), dtype uint8.
Luminance maps are float64 arrays of shape (height, width).  Grid cells
are indexed ``grid[cy, cx]`` while positions elsewhere in the package are
``(x, y)`` pairs with ``x`` the column index.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .validation import check_rgb_frame, check_luminance_map

DEFAULT_GAMMA = 2.2
DEFAULT_GRID_SIZE = 12

# CIE 1931 colorimetric matrix for linear RGB -> XYZ.
RGB_TO_XYZ = np.array(
    [
        [0.4124, 0.3576, 0.1805],
        [0.2126, 0.7152, 0.0722],
        [0.0193, 0.1192, 0.9505],
    ]
)

# Luminance is the Y row of the matrix above.
LUMA_R, LUMA_G, LUMA_B = 0.2126, 0.7152, 0.0722


def linearize(frame, gamma=DEFAULT_GAMMA):
    """Convert 8-bit sRGB components to linear RGB in [0, 1].

    Each component C_s is mapped to (C_s / 255) ** gamma, the effective
    single-exponent gamma model of the sRGB encoding.

    Parameters
    ----------
    frame : ndarray, shape (H, W, 3), uint8
    gamma : float
        Decoding exponent, 2.2 by default.

    Returns
    -------
    ndarray, shape (H, W, 3), float64, values in [0, 1].
    """
    frame = check_rgb_frame(frame)
    return (frame.astype(np.float64) / 255.0) ** gamma


def to_xyz(linear_rgb):
    """Map linear RGB (components in [0, 1]) to CIE 1931 XYZ.

    Accepts a single pixel (3,) or an array with trailing RGB axis (..., 3).
    """
    linear_rgb = np.asarray(linear_rgb, dtype=np.float64)
    if linear_rgb.shape[-1] != 3:
        raise ValueError("expected trailing axis of size 3 (R, G, B)")
    return linear_rgb @ RGB_TO_XYZ.T


def pixel_luminance(linear_rgb):
    """Perceptual luminance: the CIE Y channel of a linear-RGB pixel.

    Equals ``to_xyz(...)[..., 1]`` but avoids the full matrix product.
    """
    linear_rgb = np.asarray(linear_rgb, dtype=np.float64)
    if linear_rgb.shape[-1] != 3:
        raise ValueError("expected trailing axis of size 3 (R, G, B)")
    return (
        LUMA_R * linear_rgb[..., 0]
        + LUMA_G * linear_rgb[..., 1]
        + LUMA_B * linear_rgb[..., 2]
    )


def normalize_map(raw):
    """Min-max normalize a luminance map to [0, 1] over the whole map.

    A constant map (max == min) normalizes to all zeros: a featureless
    scene carries no placement preference, and zero is the dark end of
    the luminance reward.
    """
    raw = check_luminance_map(raw)
    lo = raw.min()
    hi = raw.max()
    if hi == lo:
        return np.zeros_like(raw)
    return (raw - lo) / (hi - lo)


def frame_luminance(frame, gamma=DEFAULT_GAMMA, normalize=True):
    """Full per-frame pipeline: linearize, CIE Y, optional normalization."""
    lum = pixel_luminance(linearize(frame, gamma=gamma))
    return normalize_map(lum) if normalize else lum


def average_clip(maps):
    """Per-pixel arithmetic mean of the luminance maps of a clip.

    Parameters
    ----------
    maps : sequence of ndarray, all with identical (H, W) shape.

    Returns
    -------
    (mean_map, frame_count)

    Raises
    ------
    ValueError
        On an empty sequence or mismatched dimensions.
    """
    maps = [check_luminance_map(m) for m in maps]
    if not maps:
        raise ValueError("average_clip requires at least one luminance map")
    shape = maps[0].shape
    for i, m in enumerate(maps):
        if m.shape != shape:
            raise ValueError(
                f"luminance map {i} has shape {m.shape}, expected {shape}"
            )
    stack = np.stack(maps)
    # float64 accumulation; large frames overflow single-precision sums
    return stack.mean(axis=0, dtype=np.float64), len(maps)


def discretize(clip_map, n_g=DEFAULT_GRID_SIZE):
    """Reduce a luminance map to an ``n_g x n_g`` grid of cell means.

    Pixel (x, y) belongs to cell (floor(x * n_g / width),
    floor(y * n_g / height)); the cell value is the mean luminance of its
    member pixels.  The grid is square in cell count even for non-square
    frames, so cells cover rectangular pixel patches.

    Returns
    -------
    ndarray, shape (n_g, n_g), indexed [cy, cx].
    """
    clip_map = check_luminance_map(clip_map)
    if n_g < 2:
        raise ValueError("n_g must be >= 2")
    h, w = clip_map.shape
    if h < n_g or w < n_g:
        raise ValueError(f"map {w}x{h} too small for a {n_g}x{n_g} grid")
    cx = (np.arange(w) * n_g) // w
    cy = (np.arange(h) * n_g) // h
    idx = (cy[:, None] * n_g + cx[None, :]).ravel()
    sums = np.bincount(idx, weights=clip_map.ravel(), minlength=n_g * n_g)
    counts = np.bincount(idx, minlength=n_g * n_g)
    return (sums / counts).reshape(n_g, n_g)


def clip_to_grid(frames, n_g=DEFAULT_GRID_SIZE, gamma=DEFAULT_GAMMA):
    """Frames of a clip -> averaged normalized map -> luminance grid."""
    maps = [frame_luminance(f, gamma=gamma) for f in frames]
    mean_map, _ = average_clip(maps)
    return discretize(mean_map, n_g=n_g)


class SceneLuminance(BaseEstimator, TransformerMixin):
    """Transformer from sRGB frame clips to luminance grid contexts.

    ``transform`` accepts either a single clip (list of frames) or a list
    of clips and returns the corresponding grid(s).  Stateless: ``fit``
    only validates parameters.

    Parameters
    ----------
    n_g : int
        Grid side length (cells per axis).
    gamma : float
        sRGB decoding exponent.
    """

    def __init__(self, n_g=DEFAULT_GRID_SIZE, gamma=DEFAULT_GAMMA):
        self.n_g = n_g
        self.gamma = gamma

    def fit(self, X=None, y=None):
        if self.n_g < 2:
            raise ValueError("n_g must be >= 2")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        return self

    def transform(self, X):
        self.fit()
        if isinstance(X, np.ndarray) and X.ndim == 4 or (
            isinstance(X, (list, tuple)) and len(X) and np.ndim(X[0]) == 3
        ):
            return clip_to_grid(X, n_g=self.n_g, gamma=self.gamma)
        return [clip_to_grid(clip, n_g=self.n_g, gamma=self.gamma) for clip in X]
