"""Shared expensive fixtures: trained decoders reused across test modules."""

import time

import numpy as np
import pytest

from scenelayout.decoder import FuzzyDecoder
from scenelayout.rewards import RewardCurves
from scenelayout.synth import HIGH_QUALITY, SignalSynthesizer, spread_conditions
from scenelayout.validation import named_rng


@pytest.fixture(scope="session")
def highsnr_split():
    """600 high-SNR trials: 480 train / 120 held out, plus the fit time.

    This is the capability benchmark's protocol; other tests reuse the
    trained model to keep the suite affordable.
    """
    t0 = time.time()
    rng = named_rng(1, "fixture-highsnr")
    synth = SignalSynthesizer()
    X, y = synth.dataset(100, HIGH_QUALITY, 3.0, rng)  # 600 trials
    train_idx, test_idx = [], []
    for cls in range(6):
        cls_idx = np.flatnonzero(y == cls)
        train_idx.extend(cls_idx[:80])
        test_idx.extend(cls_idx[80:])
    train_idx = np.asarray(train_idx)
    test_idx = np.asarray(test_idx)
    decoder = FuzzyDecoder(max_passes=60, random_state=0)
    decoder.fit(X[train_idx], y[train_idx])
    elapsed = time.time() - t0
    return {
        "decoder": decoder,
        "synth": synth,
        "X_test": X[test_idx],
        "y_test": y[test_idx],
        "train_seconds": elapsed,
    }


@pytest.fixture(scope="session")
def spread_decoder():
    """Decoder trained across the measured condition grid (the offline
    protocol's analogue); used by the end-to-end session tests."""
    curves = RewardCurves()
    synth = SignalSynthesizer(curves)
    rng = named_rng(2, "fixture-spread")
    X, y = [], []
    for cond in spread_conditions(curves):
        Xc, yc = synth.dataset(5, cond, 3.0, rng)
        X.append(Xc)
        y.append(yc)
    X = np.concatenate(X)
    y = np.concatenate(y)
    decoder = FuzzyDecoder(max_passes=60, random_state=3)
    decoder.fit(X, y)
    return decoder, synth
