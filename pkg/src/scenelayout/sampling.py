"""Diverse candidate-layout sampling.

Candidates are drawn per stimulus from the disc of cells within
``d_max`` of its paired object (positions further away earn zero SOD
reward, so sampling there wastes budget), then thinned with a
farthest-first pass so a batch covers the arm space instead of piling
up in a few regions.

Layout-to-layout distance is the sum over stimuli of the Euclidean
distance between corresponding positions, respecting the pairing
structure of the arm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import named_rng

DEFAULT_BATCH_SIZE = 2000
DEFAULT_THRESHOLD = 0.8
DEFAULT_MAX_BATCHES = 5
DEFAULT_OVERSAMPLE = 2.0


@dataclass(frozen=True)
class SamplerConfig:
    """Candidate generation parameters.

    ``oversample`` controls the size of the random pool the
    farthest-first pass selects from (pool = oversample * batch_size).
    Half of that pool is drawn uniformly over each object's feasible
    disc (coverage) and half with probability rising toward the object
    (``near_bias_power``), since layouts hugging their objects carry
    most of the achievable SOD reward.
    """

    batch_size: int = DEFAULT_BATCH_SIZE
    threshold: float = DEFAULT_THRESHOLD
    max_batches: int = DEFAULT_MAX_BATCHES
    seed: int = 0
    oversample: float = DEFAULT_OVERSAMPLE
    near_fraction: float = 0.5
    near_bias_power: float = 2.0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.threshold <= 1.5:
            raise ValueError("threshold out of range")
        if self.max_batches < 1:
            raise ValueError("max_batches must be >= 1")
        if self.oversample < 1.0:
            raise ValueError("oversample must be >= 1")
        if not 0.0 <= self.near_fraction <= 1.0:
            raise ValueError("near_fraction must lie in [0, 1]")
        if self.near_bias_power < 0:
            raise ValueError("near_bias_power must be >= 0")


class InfeasibleContextError(ValueError):
    """No valid cell exists for some stimulus-object pair."""

    def __init__(self, object_index, message=None):
        self.object_index = object_index
        super().__init__(
            message or f"no feasible stimulus position for object {object_index}"
        )


def feasible_cells(context, d_max):
    """Cells within d_max (Euclidean, grid units) of each object.

    Returns a list of (K_i, 2) integer arrays, one per object.
    """
    n_g = context.n_g
    xs, ys = np.meshgrid(np.arange(n_g), np.arange(n_g), indexing="xy")
    cells = np.stack([xs.ravel(), ys.ravel()], axis=1)
    out = []
    for i, obj in enumerate(context.objects):
        d = np.hypot(cells[:, 0] - obj[0], cells[:, 1] - obj[1])
        mine = cells[d <= d_max + 1e-9]
        if len(mine) == 0:
            raise InfeasibleContextError(i)
        out.append(mine)
    return out


def sample_feasible_layouts(context, d_max, count, rng, bias_power=0.0,
                            max_retries=100):
    """Draw ``count`` random feasible layouts with pairwise-distinct cells.

    ``bias_power`` > 0 weights each cell by (1 - d/d_max) ** bias_power
    (with a small floor so boundary cells stay reachable); 0 samples the
    disc uniformly.  Collisions (two stimuli in one cell) are resampled;
    if a layout still collides after ``max_retries`` rounds the overlap
    is structural and the offending object is reported.
    """
    per_object = feasible_cells(context, d_max)
    n = len(per_object)
    n_g = context.n_g

    def probs(i):
        if bias_power <= 0:
            return None
        cells = per_object[i]
        d = np.hypot(*(cells - context.objects[i]).T)
        w = np.maximum(0.02, 1.0 - d / d_max) ** bias_power
        return w / w.sum()

    weights = [probs(i) for i in range(n)]

    def draw(i, size):
        cells = per_object[i]
        idx = rng.choice(len(cells), size=size, p=weights[i])
        return cells[idx]

    layouts = np.empty((count, n, 2), dtype=np.int64)
    for i in range(n):
        layouts[:, i, :] = draw(i, count)

    if n == 1:
        return layouts

    def collision_mask(batch):
        codes = batch[..., 0] * n_g + batch[..., 1]
        sorted_codes = np.sort(codes, axis=1)
        return (np.diff(sorted_codes, axis=1) == 0).any(axis=1)

    bad = collision_mask(layouts)
    retries = 0
    while bad.any():
        retries += 1
        if retries > max_retries:
            culprit = _find_structural_overlap(per_object)
            raise InfeasibleContextError(
                culprit,
                f"cannot place all stimuli in distinct cells (object {culprit} "
                "shares its only feasible cells with another object)",
            )
        idx = np.flatnonzero(bad)
        for i in range(n):
            layouts[idx, i, :] = draw(i, len(idx))
        bad[idx] = collision_mask(layouts[idx])
    return layouts


def _find_structural_overlap(per_object):
    # report the object with the fewest options among any colliding pair
    smallest = min(range(len(per_object)), key=lambda i: len(per_object[i]))
    return smallest


def layout_distances(layouts, ref):
    """Sum of per-stimulus Euclidean distances from each layout to ``ref``."""
    diff = layouts.astype(np.float64) - ref.astype(np.float64)[None]
    return np.hypot(diff[..., 0], diff[..., 1]).sum(axis=1)


def farthest_first_select(pool, k, rng):
    """Greedy max-min selection of k layouts from a pool.

    The first pick is random (seeded); every following pick maximizes the
    minimum distance to the already-chosen set.  Returns indices into the
    pool.
    """
    p = len(pool)
    if k >= p:
        return np.arange(p)
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = rng.integers(0, p)
    min_dist = layout_distances(pool, pool[chosen[0]])
    for j in range(1, k):
        nxt = int(np.argmax(min_dist))
        chosen[j] = nxt
        np.minimum(min_dist, layout_distances(pool, pool[nxt]), out=min_dist)
    return chosen


def sample_candidates(context, d_max, config, rng=None):
    """One diversity-enforced batch of candidate layouts.

    Returns an (batch_size, N, 2) array.
    """
    if rng is None:
        rng = named_rng(config.seed, "sampler")
    pool_size = max(config.batch_size, int(round(config.batch_size * config.oversample)))
    n_near = int(round(pool_size * config.near_fraction))
    parts = []
    if pool_size - n_near > 0:
        parts.append(sample_feasible_layouts(context, d_max, pool_size - n_near, rng))
    if n_near > 0:
        parts.append(
            sample_feasible_layouts(
                context, d_max, n_near, rng, bias_power=config.near_bias_power
            )
        )
    pool = np.concatenate(parts)
    idx = farthest_first_select(pool, config.batch_size, rng)
    return pool[idx]
