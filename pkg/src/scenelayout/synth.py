"""Synthetic steady-state response generator.

Human recordings are out of reach at desk scale, so the online loop is
driven by a phenomenological stand-in: each trial is a multi-channel
signal with

* the stimulus fundamental and its first harmonic,
* a 35-45 Hz band-limited component whose left/right channel asymmetry
  encodes the rotation direction (leftward rotation boosts the left
  parieto-occipital channels, and more strongly than rightward rotation
  boosts the right), and
* 1/f background noise.

All stimulus-locked amplitudes scale with a scalar quality factor in
[0, 1] derived from the reward curves of the attended stimulus's
condition, so dark placements and wide spacing yield cleaner signals.
The amplitude map was calibrated with ``scripts/calibrate_synth.py`` so
that six-class decoding accuracy at the measured anchor conditions lands
near the anchor accuracies (within the documented +/-10 pp band).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rewards import RewardCurves

SAMPLE_RATE = 500.0
N_CLASSES = 6

ROTATION_LEFT = "left"
ROTATION_RIGHT = "right"

# Occipital / posterior-parietal montage used throughout.
CHANNELS = ("POz", "PO8", "PO7", "PO6", "PO5", "PO4", "PO3", "PO1", "PO2", "O1", "O2", "Oz")
LEFT_CHANNELS = ("PO7", "PO5", "PO3", "PO1", "O1")
RIGHT_CHANNELS = ("PO8", "PO6", "PO4", "PO2", "O2")
N_CHANNELS = len(CHANNELS)

OZ_INDEX = CHANNELS.index("Oz")
PO5_INDEX = CHANNELS.index("PO5")
PO6_INDEX = CHANNELS.index("PO6")

_LEFT_IDX = np.array([CHANNELS.index(c) for c in LEFT_CHANNELS])
_RIGHT_IDX = np.array([CHANNELS.index(c) for c in RIGHT_CHANNELS])

# Stronger response over the occiput, mild per-channel variety elsewhere.
CHANNEL_GAINS = np.array(
    [0.90, 0.78, 0.80, 0.84, 0.86, 0.88, 0.90, 0.93, 0.92, 1.00, 0.98, 1.05]
)
# Fixed small conduction lags give the montage a stable phase structure.
CHANNEL_LAGS = np.linspace(0.0, 0.5, N_CHANNELS)


@dataclass(frozen=True)
class StimulusSpec:
    """Flicker frequency plus rotation direction of one stimulus."""

    frequency: float
    rotation: str

    def __post_init__(self):
        if self.rotation not in (ROTATION_LEFT, ROTATION_RIGHT):
            raise ValueError(f"rotation must be 'left' or 'right', got {self.rotation}")
        expected = rotation_for_frequency(self.frequency)
        if expected is not None and expected != self.rotation:
            raise ValueError(
                f"{self.frequency} Hz stimuli rotate {expected}ward in this paradigm"
            )


def rotation_for_frequency(freq):
    """Paradigm rule: integer frequencies rotate left, half steps right."""
    if freq in (7.0, 8.0, 9.0):
        return ROTATION_LEFT
    if freq in (7.5, 8.5, 9.5):
        return ROTATION_RIGHT
    return None


#: The six stimuli of the paradigm, index = class label.
STIMULI = tuple(
    StimulusSpec(frequency=f, rotation=rotation_for_frequency(f))
    for f in (7.0, 7.5, 8.0, 8.5, 9.0, 9.5)
)


@dataclass(frozen=True)
class TrialCondition:
    """The scene condition the attended stimulus sits in."""

    luminance: float
    isd_deg: float

    def __post_init__(self):
        if not 0.0 <= self.luminance <= 1.0:
            raise ValueError("luminance must lie in [0, 1]")
        if self.isd_deg < 0:
            raise ValueError("isd_deg must be non-negative")


#: Condition used when asking for clean, best-case trials.
HIGH_QUALITY = TrialCondition(luminance=0.1, isd_deg=40.0)


@dataclass(frozen=True)
class SynthConfig:
    """Amplitudes and weights of the signal model.

    ``amp_table`` maps the scalar quality factor to the fundamental
    amplitude by piecewise-linear interpolation.  The shipped control
    points were fitted with ``scripts/calibrate_synth.py`` so that a
    decoder trained on the spread of measured conditions reproduces the
    anchor accuracies; re-run the script after touching the noise model
    or the decoder defaults.  The (0, 0) pin makes zero quality mean
    pure noise.
    """

    sample_rate: float = SAMPLE_RATE
    amp_table: tuple = (
        (0.0, 0.0),
        (0.44, 0.035),
        (0.55, 0.065),
        (0.715, 0.09),
        (0.832, 0.115),
        (0.94, 0.135),
        (1.0, 0.45),
    )
    harmonic_ratio: float = 0.55   # first harmonic relative to fundamental
    harmonic_phase: float = 0.7    # harmonic offset; locked to the fundamental
    rotation_ratio: float = 0.60   # gamma burst relative to fundamental
    rotation_asymmetry: float = 0.45
    left_rotation_boost: float = 1.25
    amp_jitter: float = 0.20       # lognormal sigma of trial-to-trial amplitude
    noise_sigma: float = 1.0
    pink_fraction: float = 0.8     # rest of the noise power stays white
    quality_luminance_weight: float = 0.55

    @property
    def quality_isd_weight(self):
        return 1.0 - self.quality_luminance_weight

    @property
    def amp_max(self):
        return self.amp_table[-1][1]


def quality_factor(condition, curves=None, config=None):
    """Scalar in [0, 1]: weighted blend of the two factor rewards."""
    curves = curves or RewardCurves()
    config = config or SynthConfig()
    r_lum = float(curves.luminance(condition.luminance))
    r_isd = float(curves.isd(condition.isd_deg))
    return config.quality_luminance_weight * r_lum + config.quality_isd_weight * r_isd


def pink_noise(n_samples, rng, white_fraction=0.2):
    """Unit-RMS 1/f noise with a small white floor."""
    white = rng.standard_normal(n_samples)
    spec = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n_samples)
    shaping = np.ones_like(freqs)
    nonzero = freqs > 0
    shaping[nonzero] = 1.0 / np.sqrt(freqs[nonzero])
    shaping[0] = 0.0
    pink = np.fft.irfft(spec * shaping, n=n_samples)
    rms = np.sqrt(np.mean(pink**2))
    if rms > 0:
        pink /= rms
    mix = np.sqrt(1.0 - white_fraction) * pink + np.sqrt(white_fraction) * white
    return mix / np.sqrt(np.mean(mix**2))


def _band_limited_burst(n_samples, sample_rate, rng, band=(35.0, 45.0)):
    """Unit-RMS noise confined to a band, built in the frequency domain."""
    spec = np.zeros(n_samples // 2 + 1, dtype=complex)
    freqs = np.fft.rfftfreq(n_samples, d=1.0 / sample_rate)
    mask = (freqs >= band[0]) & (freqs <= band[1])
    k = int(mask.sum())
    spec[mask] = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    sig = np.fft.irfft(spec, n=n_samples)
    rms = np.sqrt(np.mean(sig**2))
    return sig / rms if rms > 0 else sig


class SignalSynthesizer:
    """Generates trials; owns the curves and calibrated amplitude map."""

    def __init__(self, curves=None, config=None):
        self.curves = curves or RewardCurves()
        self.config = config or SynthConfig()

    def amplitude(self, quality):
        """Quality -> fundamental amplitude; zero quality is pure noise."""
        q = float(np.clip(quality, 0.0, 1.0))
        qs = [p[0] for p in self.config.amp_table]
        amps = [p[1] for p in self.config.amp_table]
        return float(np.interp(q, qs, amps))

    def trial(self, stimulus, condition, duration_s, rng):
        """One synthetic epoch of shape (C, duration_s * sample_rate).

        ``stimulus`` is a class index or a StimulusSpec.
        """
        if isinstance(stimulus, (int, np.integer)):
            stimulus = STIMULI[int(stimulus)]
        if duration_s <= 0:
            raise ValueError("duration must be positive")
        cfg = self.config
        fs = cfg.sample_rate
        n = int(round(duration_s * fs))
        t = np.arange(n) / fs

        q = quality_factor(condition, self.curves, cfg)
        a1 = self.amplitude(q)
        a2 = cfg.harmonic_ratio * a1
        a_rot = cfg.rotation_ratio * a1

        f = stimulus.frequency
        phi1 = rng.uniform(0, 2 * np.pi)
        # the harmonic rides the same generator, so its phase is locked
        phi2 = 2.0 * phi1 + cfg.harmonic_phase
        jitter = rng.lognormal(0.0, cfg.amp_jitter)

        phase = 2 * np.pi * f * t
        lags = CHANNEL_LAGS[:, None]
        fund = np.sin(phase[None, :] + phi1 + lags)
        harm = np.sin(2 * phase[None, :] + phi2 + 2 * lags)
        signal = CHANNEL_GAINS[:, None] * jitter * (a1 * fund + a2 * harm)

        burst = _band_limited_burst(n, fs, rng)
        rot_gain = np.ones(N_CHANNELS)
        if stimulus.rotation == ROTATION_LEFT:
            rot_gain[_LEFT_IDX] = 1.0 + cfg.rotation_asymmetry
            rot_gain[_RIGHT_IDX] = 1.0 - cfg.rotation_asymmetry
            side_boost = cfg.left_rotation_boost
        else:
            rot_gain[_RIGHT_IDX] = 1.0 + cfg.rotation_asymmetry
            rot_gain[_LEFT_IDX] = 1.0 - cfg.rotation_asymmetry
            side_boost = 1.0
        signal += a_rot * side_boost * jitter * rot_gain[:, None] * burst[None, :]

        noise = np.stack(
            [pink_noise(n, rng, 1.0 - cfg.pink_fraction) for _ in range(N_CHANNELS)]
        )
        return signal + cfg.noise_sigma * noise

    def dataset(self, n_per_class, condition, duration_s, rng, classes=None):
        """Labeled trial set: (X of shape (n, C, T), y)."""
        classes = list(range(N_CLASSES)) if classes is None else list(classes)
        epochs = []
        labels = []
        for cls in classes:
            for _ in range(n_per_class):
                epochs.append(self.trial(cls, condition, duration_s, rng))
                labels.append(cls)
        return np.stack(epochs), np.asarray(labels, dtype=np.int64)

    def mixed_dataset(self, n_trials, conditions, duration_s, rng):
        """Trials spread over classes and a list of conditions."""
        epochs = []
        labels = []
        for i in range(n_trials):
            cls = int(rng.integers(0, N_CLASSES))
            cond = conditions[int(rng.integers(0, len(conditions)))]
            epochs.append(self.trial(cls, cond, duration_s, rng))
            labels.append(cls)
        return np.stack(epochs), np.asarray(labels, dtype=np.int64)


def synth_trial(stimulus, condition, duration_s, rng, curves=None, config=None):
    """Convenience wrapper around SignalSynthesizer.trial."""
    return SignalSynthesizer(curves, config).trial(stimulus, condition, duration_s, rng)


def spread_conditions(curves=None):
    """Condition grid mirroring the two single-factor measurement designs:
    luminance swept at fixed wide spacing, spacing swept at fixed dark
    background.  Used to build decoder training sets that span quality.
    """
    lum_levels = [round(0.1 * k, 1) for k in range(1, 10)]
    isd_levels = [5.0 * k for k in range(1, 10)]
    conds = [TrialCondition(luminance=l, isd_deg=45.0) for l in lum_levels]
    conds += [TrialCondition(luminance=0.1, isd_deg=d) for d in isd_levels]
    return conds
