"""Dual-band fuzzy-attention classifier for steady-state responses.

Architecture per band: a temporal attention layer (fuzzy rules over the
channel vector at each sample) followed by a spatial attention layer
(fuzzy rules over each channel's temporal profile), then mean pooling.
The pooled per-channel features of both bands are concatenated and fed
to a one-hidden-layer MLP.

Two practical notes:

* Spatial rules need a fixed feature dimension, but epochs arrive in
  several lengths (offline 3.86 s windows vs. 1.0-3.5 s online
  windows).  The temporal axis is therefore segment-mean pooled to a
  fixed number of bins between the two attention layers; this keeps the
  spatial layer's parameter count independent of epoch length and lets
  one trained head serve every window.
* Rule variances are trained through an exponential reparameterization
  so gradient steps cannot make them non-positive, and memberships are
  computed by softmax over negative squared Mahalanobis distances
  (log-space, max-subtracted) so distant rules do not underflow.

The artifact-removal stage of the preprocessing chain is a documented
pass-through: synthetic signals carry no ocular or muscular components,
and the slot is kept so a real-data pipeline can drop an ICA step in.
"""

from __future__ import annotations

import json

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F
from sklearn.base import BaseEstimator, ClassifierMixin

from .filters import DEFAULT_BANDS, DEFAULT_FIR_ORDER, bandpass
from .fuzzy import FuzzyRule

MODEL_FORMAT = "fuzzy-decoder/1"


def ica_artifact_removal(epoch):
    """Artifact-removal slot; identity on synthetic data."""
    return epoch


def preprocess_epoch(epoch, bands, sample_rate, fir_order=DEFAULT_FIR_ORDER):
    """Artifact slot + per-band FIR filtering; returns one copy per band."""
    epoch = ica_artifact_removal(np.asarray(epoch, dtype=np.float64))
    return [bandpass(epoch, band, sample_rate, fir_order) for band in bands]


class FuzzyAttentionLayer(nn.Module):
    """Trainable twin of :func:`scenelayout.fuzzy.tal_forward`.

    Input is (batch, positions, dim); output is the attention-weighted
    signal of the same shape plus firing strengths (batch, positions,
    n_rules) that sum to one over rules.
    """

    def __init__(self, dim, n_rules, generator=None, dtype=torch.float32):
        super().__init__()
        if n_rules < 1:
            raise ValueError("n_rules must be >= 1")
        g = generator
        eye = torch.eye(dim, dtype=dtype)
        self.centers = nn.Parameter(
            0.5 * torch.randn(n_rules, dim, generator=g, dtype=dtype)
        )
        # start wide (variance = dim) so early memberships stay soft
        self.log_variances = nn.Parameter(
            torch.full((n_rules, dim), float(np.log(dim)), dtype=dtype)
        )
        self.query = nn.Parameter(
            eye.repeat(n_rules, 1, 1)
            + 0.05 * torch.randn(n_rules, dim, dim, generator=g, dtype=dtype)
        )
        self.value = nn.Parameter(
            eye.repeat(n_rules, 1, 1)
            + 0.05 * torch.randn(n_rules, dim, dim, generator=g, dtype=dtype)
        )

    def forward(self, x):
        q = torch.einsum("jde,bpe->bpjd", self.query, x)
        diff = q - self.centers
        inv_var = torch.exp(-self.log_variances)
        d2 = (diff.pow(2) * inv_var).sum(-1)
        strengths = torch.softmax(-d2, dim=-1)
        v = torch.einsum("jde,bpe->bpjd", self.value, x)
        y = (strengths.unsqueeze(-1) * v).sum(dim=2)
        return y, strengths

    def rules(self):
        """Export the layer as FuzzyRule objects (numpy, detached)."""
        out = []
        for j in range(self.centers.shape[0]):
            out.append(
                FuzzyRule(
                    center=self.centers[j].detach().cpu().numpy().astype(np.float64),
                    variances=torch.exp(self.log_variances[j]).detach().cpu().numpy().astype(np.float64),
                    query_matrix=self.query[j].detach().cpu().numpy().astype(np.float64),
                    value_matrix=self.value[j].detach().cpu().numpy().astype(np.float64),
                )
            )
        return out


class DualBandFuzzyNet(nn.Module):
    """Per-band TAL -> segment pooling -> SAL -> mean pooling -> MLP."""

    def __init__(self, n_channels, n_rules, sal_segments, hidden_units,
                 n_classes, dropout, n_bands=2, generator=None, dtype=torch.float32):
        super().__init__()
        self.sal_segments = sal_segments
        self.tal = nn.ModuleList(
            FuzzyAttentionLayer(n_channels, n_rules, generator, dtype) for _ in range(n_bands)
        )
        self.sal = nn.ModuleList(
            FuzzyAttentionLayer(sal_segments, n_rules, generator, dtype) for _ in range(n_bands)
        )
        self.head = nn.Sequential(
            nn.Linear(n_bands * n_channels, hidden_units, dtype=dtype),
            nn.ReLU(),
            nn.Dropout(dropout),
            nn.Linear(hidden_units, n_classes, dtype=dtype),
        )

    def band_features(self, x, band_index, return_strengths=False):
        """(B, C, T) -> pooled (B, C) features for one band."""
        y, w_t = self.tal[band_index](x.transpose(1, 2))
        y = y.transpose(1, 2)  # (B, C, T)
        s = F.adaptive_avg_pool1d(y, self.sal_segments)  # (B, C, S)
        z, w_c = self.sal[band_index](s)  # (B, C, S)
        feats = z.mean(dim=2)
        if return_strengths:
            return feats, w_t, w_c
        return feats

    def forward(self, bands):
        feats = [self.band_features(x, i) for i, x in enumerate(bands)]
        return self.head(torch.cat(feats, dim=1))


class FuzzyDecoder(BaseEstimator, ClassifierMixin):
    """Six-class decoder with an sklearn-style fit/predict surface.

    Parameters follow the working configuration: five rules, 6-40 Hz and
    35-45 Hz analysis bands, Adam at lr 1e-3, dropout 0.25.

    ``fit`` expects X of shape (n_trials, n_channels, n_samples) and
    integer labels; every class must appear at least once.  Epochs are
    per-channel mean-removed and globally RMS-scaled (a per-epoch scalar,
    preserving inter-channel amplitude ratios that carry the rotation
    asymmetry).
    """

    def __init__(self, n_rules=5, bands=DEFAULT_BANDS, learning_rate=1e-3,
                 dropout=0.25, n_classes=6, sal_segments=64, hidden_units=64,
                 sample_rate=500.0, fir_order=DEFAULT_FIR_ORDER, max_passes=80,
                 batch_size=64, min_passes=10, tol=1e-4, center_init="data",
                 random_state=0):
        self.n_rules = n_rules
        self.bands = bands
        self.learning_rate = learning_rate
        self.dropout = dropout
        self.n_classes = n_classes
        self.sal_segments = sal_segments
        self.hidden_units = hidden_units
        self.sample_rate = sample_rate
        self.fir_order = fir_order
        self.max_passes = max_passes
        self.batch_size = batch_size
        self.min_passes = min_passes
        self.tol = tol
        self.center_init = center_init
        self.random_state = random_state

    # -- data plumbing -------------------------------------------------

    def _validate_bands(self):
        nyq = self.sample_rate / 2.0
        for band in self.bands:
            low, high = band
            if not 0.0 < low < high < nyq:
                raise ValueError(f"invalid band {band} for fs={self.sample_rate}")

    def _standardize(self, x):
        x = x - x.mean(axis=-1, keepdims=True)
        rms = np.sqrt(np.mean(x**2, axis=(-2, -1), keepdims=True))
        rms = np.where(rms > 0, rms, 1.0)
        return x / rms

    def _band_tensors(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 2:
            X = X[None]
        if X.ndim != 3:
            raise ValueError(f"expected (n, C, T) epochs, got shape {X.shape}")
        if hasattr(self, "n_channels_") and X.shape[1] != self.n_channels_:
            raise ValueError(
                f"epoch has {X.shape[1]} channels, model was trained with {self.n_channels_}"
            )
        copies = []
        for band in self.bands:
            filtered = bandpass(ica_artifact_removal(X), band, self.sample_rate, self.fir_order)
            copies.append(torch.as_tensor(self._standardize(filtered), dtype=torch.float32))
        return copies

    # -- training ------------------------------------------------------

    def fit(self, X, y):
        self._validate_bands()
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if X.ndim != 3:
            raise ValueError(f"expected (n, C, T) training epochs, got {X.shape}")
        if y.shape != (X.shape[0],):
            raise ValueError("y must hold one label per epoch")
        present = set(int(c) for c in np.unique(y))
        expected = set(range(self.n_classes))
        if not expected <= present:
            missing = sorted(expected - present)
            raise ValueError(f"training set is missing classes {missing}")

        torch.manual_seed(self.random_state)
        gen = torch.Generator().manual_seed(self.random_state)
        self.n_channels_ = X.shape[1]
        self.classes_ = np.arange(self.n_classes)
        net = DualBandFuzzyNet(
            n_channels=self.n_channels_,
            n_rules=self.n_rules,
            sal_segments=self.sal_segments,
            hidden_units=self.hidden_units,
            n_classes=self.n_classes,
            dropout=self.dropout,
            n_bands=len(self.bands),
            generator=gen,
        )
        bands = self._band_tensors(X)
        if self.center_init == "data":
            self._init_centers_from_data(net, bands, gen)
        elif self.center_init != "random":
            raise ValueError("center_init must be 'data' or 'random'")
        labels = torch.as_tensor(y)
        optimizer = torch.optim.Adam(net.parameters(), lr=self.learning_rate)
        n = X.shape[0]
        history = []
        net.train()
        for _ in range(self.max_passes):
            order = torch.randperm(n, generator=gen)
            total = 0.0
            for start in range(0, n, self.batch_size):
                idx = order[start : start + self.batch_size]
                batch = [b[idx] for b in bands]
                optimizer.zero_grad()
                logits = net(batch)
                loss = F.cross_entropy(logits, labels[idx])
                loss.backward()
                optimizer.step()
                total += float(loss.detach()) * len(idx)
            history.append(total / n)
            if len(history) > max(self.min_passes, 5):
                recent = history[-4:]
                if max(recent) - min(recent) < self.tol and len(history) >= self.min_passes:
                    break
        net.eval()
        self.model_ = net
        self.loss_history_ = history
        return self

    @staticmethod
    def _init_centers_from_data(net, bands, gen):
        """Anchor rule prototypes on observed samples (RBF-style init).

        Uniformly initialized centers sit far from the data manifold and
        produce near-uniform memberships, which stalls early training;
        sampling centers from actual frames / segment profiles gives the
        attention structure from the first pass.
        """
        with torch.no_grad():
            for i, x in enumerate(bands):
                frames = x.transpose(1, 2).reshape(-1, x.shape[1])
                idx = torch.randint(0, frames.shape[0],
                                    (net.tal[i].centers.shape[0],), generator=gen)
                net.tal[i].centers.copy_(frames[idx])
                y, _ = net.tal[i](x.transpose(1, 2))
                seg = F.adaptive_avg_pool1d(y.transpose(1, 2), net.sal_segments)
                profiles = seg.reshape(-1, net.sal_segments)
                idx = torch.randint(0, profiles.shape[0],
                                    (net.sal[i].centers.shape[0],), generator=gen)
                net.sal[i].centers.copy_(profiles[idx])

    def _require_fit(self):
        if not hasattr(self, "model_"):
            raise RuntimeError("decoder is not fitted")

    # -- inference -----------------------------------------------------

    def decision_function(self, X):
        self._require_fit()
        bands = self._band_tensors(X)
        self.model_.eval()
        with torch.no_grad():
            logits = self.model_(bands)
        return logits.numpy()

    def predict_proba(self, X):
        logits = self.decision_function(X)
        return torch.softmax(torch.as_tensor(logits), dim=-1).numpy()

    def predict(self, X):
        return self.decision_function(X).argmax(axis=-1)

    def classify(self, epoch):
        """Probability vector for a single (C, T) epoch."""
        return self.predict_proba(np.asarray(epoch)[None])[0]

    # -- interpretability ----------------------------------------------

    def temporal_firing_strengths(self, epoch, band_index=0):
        """(T, n_rules) TAL strengths of one epoch, for spectra analyses."""
        self._require_fit()
        bands = self._band_tensors(np.asarray(epoch)[None])
        x = bands[band_index]
        self.model_.eval()
        with torch.no_grad():
            _, w = self.model_.tal[band_index](x.transpose(1, 2))
        return w[0].numpy()

    def spatial_firing_strengths(self, epoch, band_index=0):
        """(C, n_rules) SAL strengths of one epoch."""
        self._require_fit()
        bands = self._band_tensors(np.asarray(epoch)[None])
        x = bands[band_index]
        self.model_.eval()
        with torch.no_grad():
            _, _, w_c = self.model_.band_features(x, band_index, return_strengths=True)
        return w_c[0].numpy()

    def temporal_rules(self, band_index=0):
        return self.model_.tal[band_index].rules()

    def spatial_rules(self, band_index=0):
        return self.model_.sal[band_index].rules()

    # -- persistence ---------------------------------------------------

    def save(self, path):
        """Versioned JSON dump of hyperparameters and parameter tensors."""
        self._require_fit()
        tensors = {
            k: v.detach().cpu().numpy().tolist()
            for k, v in self.model_.state_dict().items()
        }
        payload = {
            "format": MODEL_FORMAT,
            "params": self.get_params(),
            "n_channels": int(self.n_channels_),
            "tensors": tensors,
        }
        payload["params"]["bands"] = [list(b) for b in self.bands]
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("format") != MODEL_FORMAT:
            raise ValueError(f"unrecognized decoder model file: {path}")
        params = dict(payload["params"])
        params["bands"] = tuple(tuple(b) for b in params["bands"])
        model = cls(**params)
        model.n_channels_ = int(payload["n_channels"])
        model.classes_ = np.arange(model.n_classes)
        net = DualBandFuzzyNet(
            n_channels=model.n_channels_,
            n_rules=model.n_rules,
            sal_segments=model.sal_segments,
            hidden_units=model.hidden_units,
            n_classes=model.n_classes,
            dropout=model.dropout,
            n_bands=len(model.bands),
        )
        state = {k: torch.as_tensor(np.asarray(v, dtype=np.float32))
                 for k, v in payload["tensors"].items()}
        net.load_state_dict(state)
        net.eval()
        model.model_ = net
        model.loss_history_ = []
        return model
