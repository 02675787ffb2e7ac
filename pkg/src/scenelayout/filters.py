"""FIR band splitting and FFT amplitude spectra.

The decoder consumes two band-filtered copies of each epoch: a wide
6-40 Hz band carrying the stimulus fundamental and harmonics, and a
35-45 Hz band carrying rotation-related gamma activity.  Filters are
linear-phase windowed-sinc designs whose constant group delay (order/2
samples) is compensated so filtered epochs stay time-aligned with their
trigger events.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import firwin, lfilter

DEFAULT_FIR_ORDER = 250
FREQUENCY_BAND = (6.0, 40.0)
ROTATION_BAND = (35.0, 45.0)
DEFAULT_BANDS = (FREQUENCY_BAND, ROTATION_BAND)


def design_bandpass(band, sample_rate, order=DEFAULT_FIR_ORDER):
    """Windowed-sinc (Hamming) bandpass taps of the given even order."""
    low, high = band
    nyquist = sample_rate / 2.0
    if not 0.0 < low < high < nyquist:
        raise ValueError(
            f"band edges must satisfy 0 < low < high < {nyquist}, got {band}"
        )
    if order % 2 != 0:
        raise ValueError("order must be even so the group delay is integral")
    return firwin(order + 1, [low, high], pass_zero=False, fs=sample_rate, window="hamming")


def bandpass(signal, band, sample_rate, order=DEFAULT_FIR_ORDER):
    """Filter along the last axis with group-delay compensation.

    The signal is zero-padded by order/2 samples before filtering and the
    leading delay dropped, so output sample t aligns with input sample t
    and the output length equals the input length.
    """
    taps = design_bandpass(band, sample_rate, order)
    signal = np.asarray(signal, dtype=np.float64)
    delay = order // 2
    pad = np.zeros(signal.shape[:-1] + (delay,))
    padded = np.concatenate([signal, pad], axis=-1)
    filtered = lfilter(taps, [1.0], padded, axis=-1)
    return filtered[..., delay:]


def amplitude_spectrum(signal, sample_rate):
    """Single-sided amplitude spectrum along the last axis.

    Interior bins are scaled by 2/T so a unit-amplitude sine over an
    integer number of periods reads 1.0 at its bin; the DC bin (and the
    Nyquist bin for even T) are scaled by 1/T.  Bin width is
    sample_rate / T.

    Returns
    -------
    (freqs, amplitudes) with freqs of length T // 2 + 1.
    """
    signal = np.asarray(signal, dtype=np.float64)
    t = signal.shape[-1]
    if t == 0:
        raise ValueError("empty signal")
    spec = np.fft.rfft(signal, axis=-1)
    amps = np.abs(spec) * (2.0 / t)
    amps[..., 0] *= 0.5
    if t % 2 == 0:
        amps[..., -1] *= 0.5
    freqs = np.fft.rfftfreq(t, d=1.0 / sample_rate)
    return freqs, amps


def band_power(signal, band, sample_rate):
    """Mean squared spectral amplitude inside a band (inclusive edges)."""
    freqs, amps = amplitude_spectrum(signal, sample_rate)
    mask = (freqs >= band[0]) & (freqs <= band[1])
    if not mask.any():
        raise ValueError(f"band {band} contains no FFT bins at this length")
    return (amps[..., mask] ** 2).sum(axis=-1) / 2.0


def spectrum_to_csv(path, freqs, amps):
    """Write a spectrum as CSV with columns frequency, amplitude."""
    amps = np.asarray(amps)
    if amps.ndim != 1:
        raise ValueError("spectrum_to_csv expects a single spectrum")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("frequency,amplitude\n")
        for f, a in zip(freqs, amps):
            fh.write(f"{f:.6f},{a:.8g}\n")
