"""Reward model for stimulus layouts.

Three per-stimulus components drive layout quality:

* luminance reward ``r_L`` -- a monotone interpolant over measured
  (luminance level, accuracy) anchors, min-max normalized to [0, 1];
* inter-stimulus-distance reward ``r_D`` -- same construction over
  (visual-angle degrees, accuracy) anchors;
* stimulus-object-distance reward ``r_O = max(0, 1 - d / d_max)``, a
  constraint keeping each stimulus visually aligned with its object.

The layout reward blends the mean and the minimum of the per-stimulus
component sums so one badly placed stimulus cannot hide behind a good
average::

    r = alpha * mean_i(s_i) / k + (1 - alpha) * min_i(s_i) / k

with ``s_i`` the sum of the k active components for stimulus i.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

# Factors a reward configuration may aggregate over.
FACTOR_LUMINANCE = "luminance"
FACTOR_ISD = "isd"
FACTOR_SOD = "sod"
ALL_FACTORS = (FACTOR_LUMINANCE, FACTOR_ISD, FACTOR_SOD)

DEFAULT_ALPHA = 0.25
DEFAULT_D_MAX = 3.0 * math.sqrt(2.0)  # grid units; ~a 3-cell reach around an object
DEFAULT_N_STIMULI = 6
DEFAULT_DEGREES_PER_CELL = 4.0


class RewardCurve:
    """Piecewise-linear reward over (factor value, accuracy) anchors.

    Accuracies are min-max normalized so the best measured condition maps
    to reward 1 and the worst to 0.  Queries outside the anchor range
    clamp to the terminal anchor's reward.
    """

    def __init__(self, anchors):
        pts = [(float(v), float(a)) for v, a in anchors]
        if len(pts) < 2:
            raise ValueError("a reward curve needs at least two anchors")
        values = np.array([p[0] for p in pts])
        accs = np.array([p[1] for p in pts])
        if np.any(np.diff(values) <= 0):
            raise ValueError("anchor factor values must be strictly increasing")
        lo, hi = accs.min(), accs.max()
        if hi == lo:
            raise ValueError("anchor accuracies are all equal; no dynamic range")
        self.values = values
        self.accuracies = accs
        self.rewards = (accs - lo) / (hi - lo)

    def __call__(self, x):
        """Evaluate the curve; np.interp clamps beyond the anchor range."""
        return np.interp(x, self.values, self.rewards)

    @property
    def anchors(self):
        return list(zip(self.values.tolist(), self.accuracies.tolist()))

    @classmethod
    def from_csv(cls, path_or_file):
        """Load anchors from a CSV with header ``factor,accuracy``.

        Lines starting with '#' are comments.
        """
        if hasattr(path_or_file, "read"):
            text = path_or_file.read()
        else:
            with open(path_or_file, "r", encoding="utf-8") as fh:
                text = fh.read()
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        reader = csv.DictReader(io.StringIO("\n".join(lines)))
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["factor", "accuracy"]:
            raise ValueError("anchor CSV must have header 'factor,accuracy'")
        anchors = [(float(row["factor"]), float(row["accuracy"])) for row in reader]
        return cls(anchors)

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["factor", "accuracy"])
            for v, a in self.anchors:
                writer.writerow([f"{v:g}", f"{a:g}"])


def curve_from_anchors(points):
    """Build a RewardCurve from (factor value, accuracy) pairs."""
    return RewardCurve(points)


def default_luminance_curve():
    """Shipped luminance-accuracy curve (dark scenes decode best)."""
    with resources.files("scenelayout.data").joinpath("luminance_anchors.csv").open("r") as fh:
        return RewardCurve.from_csv(fh)


def default_isd_curve():
    """Shipped ISD-accuracy curve (wider spacing decodes better)."""
    with resources.files("scenelayout.data").joinpath("isd_anchors.csv").open("r") as fh:
        return RewardCurve.from_csv(fh)


def sod_reward(d, d_max=DEFAULT_D_MAX):
    """Stimulus-object distance reward: max(0, 1 - d / d_max)."""
    if d_max <= 0:
        raise ValueError("d_max must be positive")
    return np.maximum(0.0, 1.0 - np.asarray(d, dtype=np.float64) / d_max)


@dataclass(frozen=True)
class RewardConfig:
    """Weights and geometry for layout reward evaluation.

    ``degrees_per_cell`` converts grid-unit inter-stimulus distances into
    the visual-angle degrees the ISD curve is anchored in.
    """

    alpha: float = DEFAULT_ALPHA
    d_max: float = DEFAULT_D_MAX
    n_stimuli: int = DEFAULT_N_STIMULI
    degrees_per_cell: float = DEFAULT_DEGREES_PER_CELL
    factors: tuple = ALL_FACTORS

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.d_max <= 0:
            raise ValueError("d_max must be positive")
        if self.n_stimuli < 1:
            raise ValueError("n_stimuli must be >= 1")
        if self.degrees_per_cell <= 0:
            raise ValueError("degrees_per_cell must be positive")
        unknown = set(self.factors) - set(ALL_FACTORS)
        if unknown:
            raise ValueError(f"unknown reward factors: {sorted(unknown)}")
        if not self.factors:
            raise ValueError("at least one reward factor is required")

    def to_json(self, path):
        payload = {
            "alpha": self.alpha,
            "d_max": self.d_max,
            "n_stimuli": self.n_stimuli,
            "degrees_per_cell": self.degrees_per_cell,
        }
        if tuple(self.factors) != ALL_FACTORS:
            payload["factors"] = list(self.factors)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls(
            alpha=payload.get("alpha", DEFAULT_ALPHA),
            d_max=payload.get("d_max", DEFAULT_D_MAX),
            n_stimuli=payload.get("n_stimuli", DEFAULT_N_STIMULI),
            degrees_per_cell=payload.get("degrees_per_cell", DEFAULT_DEGREES_PER_CELL),
            factors=tuple(payload.get("factors", ALL_FACTORS)),
        )


@dataclass(frozen=True)
class StimulusAssessment:
    """Raw per-stimulus measurements feeding the reward components.

    ``nearest_neighbor_deg`` is the inter-stimulus distance already in
    visual-angle degrees; ``object_distance`` stays in grid units.
    """

    luminance: float
    nearest_neighbor_deg: float
    object_distance: float

    def __post_init__(self):
        if self.luminance < 0 or self.nearest_neighbor_deg < 0 or self.object_distance < 0:
            raise ValueError("assessment fields must be non-negative")


@dataclass(frozen=True)
class RewardCurves:
    """The pair of interpolated factor curves used throughout the package."""

    luminance: RewardCurve = field(default_factory=default_luminance_curve)
    isd: RewardCurve = field(default_factory=default_isd_curve)


def component_rewards(assessment, curves, config):
    """Per-factor rewards for one stimulus, honoring config.factors."""
    out = {}
    if FACTOR_LUMINANCE in config.factors:
        out[FACTOR_LUMINANCE] = float(curves.luminance(assessment.luminance))
    if FACTOR_ISD in config.factors:
        out[FACTOR_ISD] = float(curves.isd(assessment.nearest_neighbor_deg))
    if FACTOR_SOD in config.factors:
        out[FACTOR_SOD] = float(sod_reward(assessment.object_distance, config.d_max))
    return out


def layout_reward(assessments, curves, config):
    """Minimum-aware aggregate reward of a full layout, in [0, 1].

    With all three factors active this is
    ``alpha/(3N) * sum_i s_i + (1-alpha)/3 * min_i s_i`` where
    ``s_i = r_L + r_D + r_O``.  When a factor is excluded (a baseline
    pipeline), the divisor shrinks to the active factor count so the
    reward keeps its [0, 1] range.
    """
    if len(assessments) == 0:
        raise ValueError("layout_reward requires at least one assessment")
    if len(assessments) != config.n_stimuli:
        raise ValueError(
            f"expected {config.n_stimuli} assessments, got {len(assessments)}"
        )
    k = len(config.factors)
    sums = np.array(
        [sum(component_rewards(a, curves, config).values()) for a in assessments]
    )
    return float(config.alpha * sums.mean() / k + (1.0 - config.alpha) * sums.min() / k)


def layout_reward_from_features(features, config):
    """Vectorized layout reward computed from bandit feature rows.

    The 3N feature vector already holds the reward-transformed components
    (with excluded factors zeroed), so the layout reward reduces to the
    mean/min blend of its per-stimulus slot sums.  Agrees with
    :func:`layout_reward` on the same geometry; used for bulk training
    data generation.
    """
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    m, dim = features.shape
    if dim != 3 * config.n_stimuli:
        raise ValueError(f"expected {3 * config.n_stimuli} feature slots, got {dim}")
    k = len(config.factors)
    sums = features.reshape(m, config.n_stimuli, 3).sum(axis=2)
    return config.alpha * sums.mean(axis=1) / k + (1.0 - config.alpha) * sums.min(axis=1) / k


def assess_layout(grid, positions, objects, config):
    """Measure luminance / ISD / SOD for each stimulus of a layout.

    Distances are Euclidean between cell coordinates; nearest-neighbor
    distances are converted to degrees via ``config.degrees_per_cell``.
    """
    positions = np.asarray(positions, dtype=np.float64)
    objects = np.asarray(objects, dtype=np.float64)
    n = positions.shape[0]
    if n != objects.shape[0]:
        raise ValueError("positions and objects must pair up one-to-one")
    out = []
    for i in range(n):
        if n > 1:
            deltas = positions - positions[i]
            dists = np.hypot(deltas[:, 0], deltas[:, 1])
            dists[i] = np.inf
            nn_cells = float(dists.min())
        else:
            nn_cells = float("inf")
        nn_deg = nn_cells * config.degrees_per_cell
        if not math.isfinite(nn_deg):
            # a lone stimulus has no neighbor to compete with; the curve
            # clamps to its widest measured spacing
            nn_deg = 1e9
        sod = float(np.hypot(*(positions[i] - objects[i])))
        xi = int(round(positions[i, 0]))
        yi = int(round(positions[i, 1]))
        out.append(
            StimulusAssessment(
                luminance=float(grid[yi, xi]),
                nearest_neighbor_deg=nn_deg,
                object_distance=sod,
            )
        )
    return out
