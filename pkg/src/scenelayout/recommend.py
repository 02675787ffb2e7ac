"""Layout recommendation: score candidate batches, gate on a threshold.

Candidates are scored optimistically (UCB); the accept decision uses the
exploitation-only prediction of the batch's best arm.  If no batch
produces a prediction above the threshold within the retry cap, the
best layout seen so far is returned with ``below_threshold`` set so the
caller keeps observability into the exhaustion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator

from .bandit import build_features_batch
from .rewards import FACTOR_ISD, RewardConfig, RewardCurves
from .sampling import SamplerConfig, sample_candidates
from .validation import named_rng


@dataclass(frozen=True)
class Recommendation:
    positions: np.ndarray  # (N, 2) int cell coordinates
    predicted_reward: float
    below_threshold: bool
    batches_used: int

    def to_json(self):
        return json.dumps(
            {
                "positions": [[int(x), int(y)] for x, y in self.positions],
                "predicted_reward": round(float(self.predicted_reward), 6),
                "below_threshold": bool(self.below_threshold),
                "batches_used": int(self.batches_used),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text):
        payload = json.loads(text)
        return cls(
            positions=np.asarray(payload["positions"], dtype=np.int64),
            predicted_reward=float(payload["predicted_reward"]),
            below_threshold=bool(payload["below_threshold"]),
            batches_used=int(payload["batches_used"]),
        )


def loo_reward_config(config):
    """Reward configuration of the luminance-only pipeline (ISD excluded)."""
    factors = tuple(f for f in config.factors if f != FACTOR_ISD)
    return replace(config, factors=factors)


def no_layout(context):
    """Non-optimized baseline: overlay each stimulus on its object."""
    return context.objects.copy()


class LayoutRecommender(BaseEstimator):
    """Bandit-driven stimulus layout recommender.

    Parameters
    ----------
    bandit : LinUcbBandit
        Trained (or fresh) scoring model.
    curves : RewardCurves
    reward_config : RewardConfig
        Factor set and geometry; pass ``loo_reward_config(...)`` together
        with a bandit trained the same way to get the luminance-only
        baseline.
    sampler : SamplerConfig
    """

    def __init__(self, bandit, curves=None, reward_config=None, sampler=None):
        self.bandit = bandit
        self.curves = curves or RewardCurves()
        self.reward_config = reward_config or RewardConfig()
        self.sampler = sampler or SamplerConfig()

    def recommend(self, context, seed=None):
        """Best layout for a context; deterministic given (state, context, seed)."""
        if seed is None:
            seed = self.sampler.seed
        rng = seed if isinstance(seed, np.random.Generator) else named_rng(seed, "recommender")
        best_ucb = -np.inf
        best_arm = None
        best_pred = None
        batches = 0
        for _ in range(self.sampler.max_batches):
            batches += 1
            arms = sample_candidates(
                context, self.reward_config.d_max, self.sampler, rng=rng
            )
            feats = build_features_batch(context, arms, self.curves, self.reward_config)
            ucb = self.bandit.ucb_score(feats)
            top = int(np.argmax(ucb))
            pred = float(self.bandit.predict(feats[top]))
            if ucb[top] > best_ucb:
                best_ucb = float(ucb[top])
                best_arm = arms[top]
                best_pred = pred
            if pred >= self.sampler.threshold:
                return Recommendation(
                    positions=arms[top],
                    predicted_reward=pred,
                    below_threshold=False,
                    batches_used=batches,
                )
        return Recommendation(
            positions=best_arm,
            predicted_reward=best_pred,
            below_threshold=True,
            batches_used=batches,
        )

    def predict(self, contexts, seed=None):
        """sklearn-style alias: recommend for one context or a list of them."""
        if hasattr(contexts, "grid"):
            return self.recommend(contexts, seed=seed)
        return [self.recommend(c, seed=seed) for c in contexts]
