"""Fuzzy-attention primitives (reference numpy implementation).

A fuzzy rule j owns a prototype vector r_j, a diagonal covariance, and
per-rule query/value projections.  For an input vector x the rule's
firing strength is the softmax-normalized Gaussian membership

    w_j = softmax_j( -|| W_j^Q x - r_j ||^2_{Sigma_j^-1} )

and the attention output aggregates the value projections:

    y = sum_j w_j * (W_j^V x).

Temporal attention applies this per time step (feature dim = channels);
spatial attention is the same computation on the transposed signal
(feature dim = time bins), so both are expressed through one routine.

These routines are the package's readable reference; the trainable
decoder re-implements the same math as a torch module and is tested
against this one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FuzzyRule:
    """One rule: prototype, diagonal covariance, projections."""

    center: np.ndarray       # (D,)
    variances: np.ndarray    # (D,) strictly positive diagonal of Sigma
    query_matrix: np.ndarray  # (D, D)
    value_matrix: np.ndarray  # (D, D)

    def __post_init__(self):
        center = np.asarray(self.center, dtype=np.float64)
        variances = np.asarray(self.variances, dtype=np.float64)
        wq = np.asarray(self.query_matrix, dtype=np.float64)
        wv = np.asarray(self.value_matrix, dtype=np.float64)
        d = center.shape[0]
        if variances.shape != (d,) or wq.shape != (d, d) or wv.shape != (d, d):
            raise ValueError("rule tensors disagree on the feature dimension")
        if np.any(variances <= 0):
            raise ValueError("rule variances must be strictly positive")
        for arr in (center, variances, wq, wv):
            if not np.all(np.isfinite(arr)):
                raise ValueError("rule parameters must be finite")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "variances", variances)
        object.__setattr__(self, "query_matrix", wq)
        object.__setattr__(self, "value_matrix", wv)

    @property
    def dim(self):
        return self.center.shape[0]


def random_rules(n_rules, dim, rng, scale=1.0):
    """Random rule bank for tests and initialization experiments."""
    rules = []
    for _ in range(n_rules):
        rules.append(
            FuzzyRule(
                center=rng.normal(0.0, scale, dim),
                variances=np.exp(rng.normal(0.0, 0.3, dim)),
                query_matrix=np.eye(dim) + rng.normal(0.0, 0.2, (dim, dim)),
                value_matrix=np.eye(dim) + rng.normal(0.0, 0.2, (dim, dim)),
            )
        )
    return rules


def firing_strengths(x, rules):
    """Normalized rule activations for one feature vector.

    Computed in log space with the usual max-subtraction guard: squared
    Mahalanobis distances of far-away rules would otherwise underflow the
    exponential.

    Parameters
    ----------
    x : ndarray (D,)
    rules : sequence of FuzzyRule with matching dim.

    Returns
    -------
    ndarray (n_rules,) summing to 1.
    """
    x = np.asarray(x, dtype=np.float64)
    if not rules:
        raise ValueError("at least one rule is required")
    logits = np.empty(len(rules))
    for j, rule in enumerate(rules):
        diff = rule.query_matrix @ x - rule.center
        logits[j] = -np.sum(diff * diff / rule.variances)
    logits -= logits.max()
    w = np.exp(logits)
    return w / w.sum()


def tal_forward(x, rules):
    """Temporal attention over a (D, P) signal: attend along the last axis.

    For an EEG epoch D is the channel count and P the sample count.

    Returns
    -------
    y : ndarray (D, P)
        Attention-weighted signal, y(t) = sum_j w_j(t) W_j^V x(t).
    strengths : ndarray (P, n_rules)
        Firing strengths per position; rows sum to 1.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected (D, P) input, got shape {x.shape}")
    d, p = x.shape
    if rules and rules[0].dim != d:
        raise ValueError(
            f"rule dimension {rules[0].dim} does not match input dimension {d}"
        )
    n = len(rules)
    if n == 0:
        raise ValueError("at least one rule is required")

    logits = np.empty((p, n))
    values = np.empty((n, d, p))
    for j, rule in enumerate(rules):
        q = rule.query_matrix @ x  # (D, P)
        diff = q - rule.center[:, None]
        logits[:, j] = -np.sum(diff * diff / rule.variances[:, None], axis=0)
        values[j] = rule.value_matrix @ x
    logits -= logits.max(axis=1, keepdims=True)
    w = np.exp(logits)
    w /= w.sum(axis=1, keepdims=True)  # (P, n)
    y = np.einsum("pj,jdp->dp", w, values)
    return y, w


def sal_forward(y, rules):
    """Spatial attention: identical math on the transposed signal.

    Input (C, T) is attended along channels; rule feature dimension is T.

    Returns
    -------
    out : ndarray (C, T)
        Weighted features, transposed back to the input orientation.
    strengths : ndarray (C, n_rules)
    """
    y = np.asarray(y, dtype=np.float64)
    out_t, strengths = tal_forward(y.T, rules)
    return out_t.T, strengths
