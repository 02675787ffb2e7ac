"""Calibration harness for the synthetic signal model.

Self-consistent loop:

1. train a decoder on trials spread over the measured condition grid,
   generated through the current quality -> amplitude table;
2. probe that decoder's accuracy at fixed amplitudes (constant-amplitude
   synth configs) to get the accuracy-vs-amplitude curve of the decoder
   the system will actually field;
3. invert the curve at each anchor's target accuracy and print a refit
   table;
4. verify the anchor-condition accuracies through the full map.

Run after any change to the noise model, amplitude table, or decoder
defaults; paste the refit table into SynthConfig if the verification
drifts outside the +/-10 pp band.
"""

import dataclasses
import time

import numpy as np

from scenelayout.decoder import FuzzyDecoder
from scenelayout.rewards import RewardCurves, default_isd_curve, default_luminance_curve
from scenelayout.synth import (
    HIGH_QUALITY,
    SignalSynthesizer,
    SynthConfig,
    TrialCondition,
    quality_factor,
    spread_conditions,
)
from scenelayout.validation import named_rng

DURATION = 3.0
PASSES = 60


def train_spread(config, trials_per_condition, seed):
    curves = RewardCurves()
    synth = SignalSynthesizer(curves, config)
    rng = named_rng(seed, "calibration-train")
    X, y = [], []
    for cond in spread_conditions(curves):
        Xc, yc = synth.dataset(trials_per_condition, cond, DURATION, rng)
        X.append(Xc)
        y.append(yc)
    X = np.concatenate(X)
    y = np.concatenate(y)
    t0 = time.time()
    decoder = FuzzyDecoder(max_passes=PASSES, random_state=seed)
    decoder.fit(X, y)
    print(f"trained on {len(y)} trials in {time.time() - t0:.0f}s "
          f"(final loss {decoder.loss_history_[-1]:.4f})")
    return decoder, synth


def probe_accuracy_curve(decoder, base_config, amplitudes, trials=60, seed=99):
    """Accuracy at fixed amplitudes, bypassing the quality map."""
    accs = []
    for a in amplitudes:
        cfg = dataclasses.replace(base_config, amp_table=((0.0, a), (1.0, a)))
        synth = SignalSynthesizer(config=cfg)
        rng = named_rng(seed, f"probe-{a}")
        X, y = synth.dataset(max(1, trials // 6), HIGH_QUALITY, DURATION, rng)
        accs.append(float((decoder.predict(X) == y).mean()))
        print(f"  amp {a:.3f}: accuracy {accs[-1]:.3f}")
    return np.asarray(accs)


def anchor_points():
    lum = default_luminance_curve()
    isd = default_isd_curve()
    pts = [(f"lum {v}", TrialCondition(v, 45.0), a) for v, a in lum.anchors]
    pts += [(f"isd {v}", TrialCondition(0.1, v), a) for v, a in isd.anchors]
    return pts


def refit_table(probe_amps, probe_accs, config):
    """Invert the measured curve at each anchor's target accuracy."""
    order = np.argsort(probe_accs)
    accs_sorted = probe_accs[order]
    amps_sorted = np.asarray(probe_amps)[order]
    rows = []
    for _name, cond, target in anchor_points():
        q = quality_factor(cond, config=config)
        amp = float(np.interp(target, accs_sorted, amps_sorted))
        rows.append((q, amp))
    rows.sort()
    # enforce a monotone table; collapse near-duplicate qualities
    merged = [(0.0, 0.0)]
    for q, amp in rows:
        if q - merged[-1][0] < 0.02:
            merged[-1] = (merged[-1][0], max(merged[-1][1], amp))
        else:
            merged.append((q, max(amp, merged[-1][1])))
    print("refit amp_table suggestion:")
    for q, amp in merged:
        print(f"    ({q:.3f}, {amp:.3f}),")
    return merged


def verify_anchors(decoder, synth, trials=60, seed=7):
    worst = 0.0
    for name, cond, target in anchor_points():
        rng = named_rng(seed, f"verify-{name}")
        X, y = synth.dataset(max(1, trials // 6), cond, DURATION, rng)
        acc = float((decoder.predict(X) == y).mean())
        err = acc - target
        worst = max(worst, abs(err))
        q = quality_factor(cond, config=synth.config)
        flag = "" if abs(err) <= 0.10 else "  <-- outside band"
        print(f"{name:>8}: q {q:.3f}  acc {acc:.3f}  target {target:.2f}  "
              f"err {err:+.3f}{flag}")
    print(f"worst absolute error: {worst:.3f}")


def main(trials_per_condition=10, seed=0):
    config = SynthConfig()
    decoder, synth = train_spread(config, trials_per_condition, seed)
    print("probe accuracy-vs-amplitude:")
    probe_amps = [0.01, 0.02, 0.035, 0.05, 0.065, 0.09, 0.12, 0.16, 0.22, 0.30, 0.45]
    probe_accs = probe_accuracy_curve(decoder, config, probe_amps)
    refit_table(probe_amps, probe_accs, config)
    print("verification through the full map:")
    verify_anchors(decoder, synth)


if __name__ == "__main__":
    main()
