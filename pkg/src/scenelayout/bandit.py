"""Linear contextual bandit over layout features.

The context is a luminance grid plus the paired object cells; an arm is
a full stimulus layout.  Each context-arm pair maps to a 3N feature
vector holding, per stimulus, the reward-transformed luminance, ISD and
SOD values.  Because the layout reward is (mostly) linear in those
transformed components, ridge regression on them recovers an
interpretable parameter vector and UCB scoring needs no feature
engineering beyond the curves themselves.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .rewards import (
    FACTOR_ISD,
    FACTOR_LUMINANCE,
    FACTOR_SOD,
    RewardConfig,
    RewardCurves,
    layout_reward,
    assess_layout,
)
from .validation import check_grid, check_positions

STATE_FORMAT = "linucb-state/1"
DEFAULT_LAMBDA = 0.5


@dataclass(frozen=True)
class ContextGrid:
    """Scene context: luminance grid plus N object cell coordinates."""

    grid: np.ndarray
    objects: np.ndarray

    def __post_init__(self):
        grid = check_grid(self.grid)
        objects = check_positions(self.objects, grid.shape[0], name="objects")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "objects", objects)

    @property
    def n_g(self):
        return self.grid.shape[0]

    @property
    def n_objects(self):
        return self.objects.shape[0]


def build_features_batch(context, arms, curves, config):
    """Feature matrix for many arms under one context.

    Parameters
    ----------
    context : ContextGrid
    arms : ndarray, shape (M, N, 2), integer (x, y) cell coordinates.
    curves : RewardCurves
    config : RewardConfig

    Returns
    -------
    ndarray, shape (M, 3N); slot 3i is the luminance reward of stimulus
    i, slot 3i+1 its ISD reward, slot 3i+2 its SOD reward.  Slots of
    factors excluded by ``config.factors`` are zero.
    """
    grid = context.grid
    arms = np.asarray(arms)
    if arms.ndim == 2:
        arms = arms[None]
    m, n, two = arms.shape
    if two != 2:
        raise ValueError("arms must have shape (M, N, 2)")
    if n != context.n_objects:
        raise ValueError(
            f"arm has {n} positions but context pairs {context.n_objects} objects"
        )
    if arms.min() < 0 or arms.max() >= context.n_g:
        raise ValueError("arm position outside grid")

    x = arms[..., 0].astype(np.int64)
    y = arms[..., 1].astype(np.int64)
    lum = grid[y, x]  # (M, N)

    pos = arms.astype(np.float64)
    delta = pos[:, :, None, :] - pos[:, None, :, :]
    dist = np.hypot(delta[..., 0], delta[..., 1])  # (M, N, N)
    ii = np.arange(n)
    dist[:, ii, ii] = np.inf
    if n > 1:
        nn_cells = dist.min(axis=2)
    else:
        nn_cells = np.full((m, n), np.inf)

    obj = context.objects.astype(np.float64)
    sod = np.hypot(*(pos - obj[None]).transpose(2, 0, 1))  # (M, N)

    feats = np.zeros((m, 3 * n))
    if FACTOR_LUMINANCE in config.factors:
        feats[:, 0::3] = curves.luminance(lum)
    if FACTOR_ISD in config.factors:
        nn_deg = np.where(np.isinf(nn_cells), curves.isd.values[-1], nn_cells * config.degrees_per_cell)
        feats[:, 1::3] = curves.isd(nn_deg)
    if FACTOR_SOD in config.factors:
        feats[:, 2::3] = np.maximum(0.0, 1.0 - sod / config.d_max)
    return feats


def build_features(context, arm, curves, config):
    """Feature vector (3N,) for a single arm."""
    return build_features_batch(context, np.asarray(arm)[None], curves, config)[0]


def reward_of_arm(context, arm, curves, config):
    """True layout reward for a (context, arm) pair."""
    arm = check_positions(arm, context.n_g, name="arm")
    assessments = assess_layout(context.grid, arm, context.objects, config)
    return layout_reward(assessments, curves, config)


class LinUcbBandit(BaseEstimator):
    """Ridge-regression linear bandit with UCB scoring.

    The design matrix starts at the identity (unit ridge prior), which
    keeps it invertible from the first observation and matches a
    zero-initialized parameter vector.  ``theta_`` is re-solved from
    (A, b) on every update; at this dimension the direct solve is cheap
    and numerically safer than incremental inverse maintenance.

    Parameters
    ----------
    dim : int
        Feature dimension (3 per stimulus; 18 for six stimuli).
    lam : float
        Exploration coefficient of the UCB bonus.
    """

    def __init__(self, dim=18, lam=DEFAULT_LAMBDA):
        self.dim = dim
        self.lam = lam
        self.reset()

    def reset(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        self.A_ = np.eye(self.dim)
        self.b_ = np.zeros(self.dim)
        self.theta_ = np.zeros(self.dim)
        self.observation_count_ = 0
        return self

    def _check_x(self, x):
        x = np.asarray(x, dtype=np.float64)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None]
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise ValueError(f"expected feature dimension {self.dim}, got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("features contain non-finite values")
        return x, squeeze

    def predict(self, X):
        """Expected reward x . theta for each row of X."""
        X, squeeze = self._check_x(X)
        out = X @ self.theta_
        return float(out[0]) if squeeze else out

    def exploration_bonus(self, X):
        """sqrt(x A^-1 x) for each row of X."""
        X, squeeze = self._check_x(X)
        solved = np.linalg.solve(self.A_, X.T)
        quad = np.einsum("ij,ji->i", X, solved)
        out = np.sqrt(np.maximum(quad, 0.0))
        return float(out[0]) if squeeze else out

    def ucb_score(self, X):
        """Optimistic score: prediction plus lam * exploration bonus."""
        X, squeeze = self._check_x(X)
        out = X @ self.theta_ + self.lam * self.exploration_bonus(X)
        return float(out[0]) if squeeze else out

    def update(self, x, r):
        """Fold one (features, reward) observation into the state."""
        x, _ = self._check_x(x)
        if x.shape[0] != 1:
            raise ValueError("update takes a single feature vector")
        r = float(r)
        if not np.isfinite(r):
            raise ValueError("reward must be finite")
        x = x[0]
        self.A_ += np.outer(x, x)
        self.b_ += r * x
        self.theta_ = np.linalg.solve(self.A_, self.b_)
        self.observation_count_ += 1
        return self

    def fit(self, X, y):
        """Batch ridge fit; equivalent to folding update over all rows."""
        X, _ = self._check_x(np.atleast_2d(np.asarray(X, dtype=np.float64)))
        y = np.asarray(y, dtype=np.float64)
        if X.shape[0] == 0:
            raise ValueError("empty training set")
        if y.shape != (X.shape[0],):
            raise ValueError("y must be one reward per feature row")
        if not np.all(np.isfinite(y)):
            raise ValueError("rewards contain non-finite values")
        self.reset()
        self.A_ += X.T @ X
        self.b_ += X.T @ y
        self.theta_ = np.linalg.solve(self.A_, self.b_)
        self.observation_count_ = X.shape[0]
        return self

    def save(self, path):
        """Serialize the state as JSON (theta, design matrix, lambda, count)."""
        payload = {
            "format": STATE_FORMAT,
            "theta": [float(v) for v in self.theta_],
            "design_matrix": [[float(v) for v in row] for row in self.A_],
            "lambda": float(self.lam),
            "observation_count": int(self.observation_count_),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("format") != STATE_FORMAT:
            raise ValueError(f"unrecognized bandit state file: {path}")
        theta = np.asarray(payload["theta"], dtype=np.float64)
        A = np.asarray(payload["design_matrix"], dtype=np.float64)
        if A.shape != (theta.size, theta.size):
            raise ValueError("design matrix shape does not match theta")
        model = cls(dim=theta.size, lam=float(payload["lambda"]))
        model.A_ = A
        model.theta_ = theta
        model.b_ = A @ theta  # b is recoverable since theta solves A theta = b
        model.observation_count_ = int(payload["observation_count"])
        return model


def train_on_triplets(triplets, curves=None, config=None, lam=DEFAULT_LAMBDA):
    """Train a bandit from (context, arm, reward) triplets.

    Rewards may be precomputed (third element not None) or derived from
    the reward model on the fly.
    """
    triplets = list(triplets)
    if not triplets:
        raise ValueError("empty training dataset")
    curves = curves or RewardCurves()
    config = config or RewardConfig()
    rows = []
    rewards = []
    for context, arm, r in triplets:
        rows.append(build_features(context, arm, curves, config))
        rewards.append(
            reward_of_arm(context, arm, curves, config) if r is None else float(r)
        )
    model = LinUcbBandit(dim=len(rows[0]), lam=lam)
    return model.fit(np.asarray(rows), np.asarray(rewards))


def save_triplets_jsonl(path, triplets):
    """Write triplets as JSON-lines: one context/arm/reward object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for context, arm, reward in triplets:
            rec = {
                "context": {
                    "grid": [[round(float(v), 6) for v in row] for row in context.grid],
                    "objects": [[int(a), int(b)] for a, b in context.objects],
                },
                "arm": [[int(a), int(b)] for a, b in np.asarray(arm)],
                "reward": None if reward is None else float(reward),
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def load_triplets_jsonl(path):
    triplets = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            context = ContextGrid(
                grid=np.asarray(rec["context"]["grid"], dtype=np.float64),
                objects=np.asarray(rec["context"]["objects"], dtype=np.int64),
            )
            arm = np.asarray(rec["arm"], dtype=np.int64)
            triplets.append((context, arm, rec.get("reward")))
    return triplets
