"""Binary epoch files.

Layout: 4-byte magic ``EEG1``, uint32 channel count, uint32 sample
count, float32 sample rate, int32 label (-1 when unlabeled), then
row-major (channel-major) float32 samples.  Little-endian throughout.
"""

from __future__ import annotations

import os
import struct

import numpy as np

MAGIC = b"EEG1"
_HEADER = struct.Struct("<4sIIfi")


def write_epoch(path, data, sample_rate, label=None):
    data = np.asarray(data, dtype=np.float32)
    if data.ndim != 2:
        raise ValueError(f"expected (C, T) epoch, got shape {data.shape}")
    c, t = data.shape
    lbl = -1 if label is None else int(label)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, c, t, float(sample_rate), lbl))
        fh.write(np.ascontiguousarray(data).tobytes())


def read_epoch(path):
    """Returns (data (C, T) float32, sample_rate, label-or-None)."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError(f"truncated epoch file: {path}")
        magic, c, t, rate, label = _HEADER.unpack(header)
        if magic != MAGIC:
            raise ValueError(f"not an epoch file (bad magic): {path}")
        raw = fh.read(4 * c * t)
        if len(raw) != 4 * c * t:
            raise ValueError(f"epoch raster shorter than header promises: {path}")
    data = np.frombuffer(raw, dtype="<f4").reshape(c, t)
    return data.copy(), float(rate), (None if label < 0 else int(label))


def write_dataset(directory, epochs, labels, sample_rate):
    """Write one epoch file per trial into a directory."""
    os.makedirs(directory, exist_ok=True)
    width = max(4, len(str(len(epochs))))
    for i, (epoch, label) in enumerate(zip(epochs, labels)):
        write_epoch(
            os.path.join(directory, f"trial_{i:0{width}d}.eeg"),
            epoch,
            sample_rate,
            label,
        )


def read_dataset(directory):
    """Read all *.eeg files of a directory; returns (X, y, sample_rate)."""
    files = sorted(
        f for f in os.listdir(directory) if f.endswith(".eeg")
    )
    if not files:
        raise ValueError(f"no .eeg epoch files in {directory}")
    epochs, labels, rates = [], [], set()
    for name in files:
        data, rate, label = read_epoch(os.path.join(directory, name))
        epochs.append(data)
        labels.append(-1 if label is None else label)
        rates.add(rate)
    if len(rates) != 1:
        raise ValueError(f"mixed sample rates in {directory}: {sorted(rates)}")
    return np.stack(epochs), np.asarray(labels, dtype=np.int64), rates.pop()
