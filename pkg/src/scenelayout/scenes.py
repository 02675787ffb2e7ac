"""Synthetic scene clips for training and simulation.

Scenes are short grayscale-in-RGB clips with strong luminance geometry
(splits, gradients, bright fields with dark pockets, and the reverse) so
layout optimization has something to exploit.  A small temporal flicker
across frames keeps the clip-averaging stage honest.
"""

from __future__ import annotations

import numpy as np

from .bandit import ContextGrid
from .luminance import clip_to_grid

SCENE_KINDS = (
    "half_split",
    "gradient",
    "dark_pockets",
    "bright_pockets",
    "uniform_dark",
    "uniform_bright",
)

DEFAULT_WIDTH = 192
DEFAULT_HEIGHT = 108
DEFAULT_FRAMES = 30


def _base_image(kind, width, height, rng):
    xs = np.linspace(0.0, 1.0, width)[None, :]
    ys = np.linspace(0.0, 1.0, height)[:, None]
    if kind == "half_split":
        split = rng.uniform(0.35, 0.65)
        img = np.where(xs < split, rng.uniform(0.02, 0.15), rng.uniform(0.75, 0.95))
        img = np.broadcast_to(img, (height, width)).copy()
        if rng.random() < 0.5:
            img = img.T[:height, :width] if img.T.shape == (height, width) else img[::-1]
    elif kind == "gradient":
        angle = rng.uniform(0, 2 * np.pi)
        ramp = np.cos(angle) * xs + np.sin(angle) * ys
        ramp = (ramp - ramp.min()) / (ramp.max() - ramp.min())
        img = 0.05 + 0.9 * ramp
    elif kind in ("dark_pockets", "bright_pockets"):
        base = 0.85 if kind == "dark_pockets" else 0.08
        img = np.full((height, width), base)
        n_blobs = rng.integers(2, 5)
        for _ in range(n_blobs):
            cx, cy = rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)
            r = rng.uniform(0.08, 0.22)
            blob = np.exp(-(((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * r**2)))
            if kind == "dark_pockets":
                img = img * (1.0 - 0.95 * blob)
            else:
                img = img + (0.9 - img) * blob
    elif kind == "uniform_dark":
        img = np.full((height, width), rng.uniform(0.03, 0.12))
    elif kind == "uniform_bright":
        img = np.full((height, width), rng.uniform(0.8, 0.95))
    else:
        raise ValueError(f"unknown scene kind {kind!r}")
    return np.clip(img, 0.0, 1.0)


def generate_clip(rng, kind=None, width=DEFAULT_WIDTH, height=DEFAULT_HEIGHT,
                  n_frames=DEFAULT_FRAMES):
    """A clip of uint8 RGB frames with per-frame flicker and sensor noise."""
    if kind is None:
        kind = SCENE_KINDS[int(rng.integers(0, len(SCENE_KINDS)))]
    base = _base_image(kind, width, height, rng)
    frames = []
    for _ in range(n_frames):
        flicker = 1.0 + rng.normal(0.0, 0.02)
        noisy = np.clip(base * flicker + rng.normal(0.0, 0.01, base.shape), 0.0, 1.0)
        gray = np.round(noisy * 255).astype(np.uint8)
        frames.append(np.repeat(gray[:, :, None], 3, axis=2))
    return frames


def place_objects(rng, n_g, n_objects=6, min_separation=1.0):
    """Random object cells; distinct, with an optional minimum spacing.

    The default enforces distinctness only (adjacent objects are a real
    occurrence the overlay baseline must live with).
    """
    for attempt in range(200):
        cells = rng.integers(0, n_g, size=(n_objects, 2))
        codes = cells[:, 0] * n_g + cells[:, 1]
        if len(np.unique(codes)) < n_objects:
            continue
        diff = cells[:, None, :] - cells[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        dist[np.arange(n_objects), np.arange(n_objects)] = np.inf
        if dist.min() >= min_separation or attempt > 150:
            return cells.astype(np.int64)
    return cells.astype(np.int64)


def generate_context(rng, kind=None, n_g=12, n_objects=6, width=DEFAULT_WIDTH,
                     height=DEFAULT_HEIGHT, n_frames=DEFAULT_FRAMES, gamma=2.2):
    """Full synthetic context: clip -> luminance grid + random objects."""
    frames = generate_clip(rng, kind=kind, width=width, height=height, n_frames=n_frames)
    grid = clip_to_grid(frames, n_g=n_g, gamma=gamma)
    objects = place_objects(rng, n_g, n_objects)
    return ContextGrid(grid=grid, objects=objects)
