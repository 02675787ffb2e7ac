"""Simulated online loop: ring buffer, trial state machine, metrics.

A session streams synthetic signals into an 8-second circular buffer and
replays the single-trial procedure (scene capture, layout
recommendation, cue, stimulus, decode, feedback) on a virtual clock: the
sample counter advances by exactly the samples each phase would produce,
so runs take milliseconds while all computed quantities keep the real
phase durations.

Per-trial decoding uses the first seconds of the stimulus phase pulled
back out of the buffer, at a sweep of window lengths, so the exported
metrics table carries accuracy and throughput per input duration.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .recommend import no_layout
from .rewards import assess_layout
from .synth import TrialCondition, pink_noise, N_CHANNELS
from .validation import named_rng

METHOD_JOLI = "JOLI"
METHOD_LOO = "LOO"
METHOD_NO = "NO"
ALL_METHODS = (METHOD_JOLI, METHOD_LOO, METHOD_NO)

PHASE_CAPTURE_S = 1.0
PHASE_CUE_S = 1.5
PHASE_STIMULUS_S = 4.0
PHASE_FEEDBACK_S = 1.5
ATTENTION_SHIFT_S = 0.135

ONLINE_WINDOW_S = 3.0
OFFLINE_OFFSET_S = 0.14
OFFLINE_WINDOW_S = 3.86
DEFAULT_WINDOWS = (1.0, 1.5, 2.0, 2.5, 3.0, 3.5)

BUFFER_SECONDS = 8.0


class BufferRangeError(ValueError):
    """Requested sample range is not readable."""


class OverwrittenRangeError(BufferRangeError):
    """Range is older than the buffer capacity and has been overwritten."""


class FutureRangeError(BufferRangeError):
    """Range extends past the samples written so far."""


class RingBuffer:
    """Fixed-capacity circular sample store with a monotone counter.

    One writer and one reader may operate concurrently; a lock publishes
    the counter only after the samples it covers are fully written, so a
    reader never observes a partially written range.
    """

    def __init__(self, n_channels, capacity):
        if n_channels < 1 or capacity < 1:
            raise ValueError("n_channels and capacity must be positive")
        self.n_channels = n_channels
        self.capacity = int(capacity)
        self._data = np.zeros((n_channels, self.capacity))
        self._lock = threading.Lock()
        self._written = 0

    @property
    def total_written(self):
        with self._lock:
            return self._written

    def append(self, chunk):
        """Append a (C, k) chunk, overwriting the oldest samples."""
        chunk = np.asarray(chunk, dtype=np.float64)
        if chunk.ndim == 1:
            chunk = chunk[None]
        if chunk.ndim != 2 or chunk.shape[0] != self.n_channels:
            raise ValueError(
                f"chunk must have {self.n_channels} channels, got shape {chunk.shape}"
            )
        k = chunk.shape[1]
        if k == 0:
            return self
        with self._lock:
            if k >= self.capacity:
                # keep the invariant: sample s lives at index s % capacity
                final = self._written + k
                idx = (final - self.capacity + np.arange(self.capacity)) % self.capacity
                self._data[:, idx] = chunk[:, -self.capacity :]
            else:
                start = self._written % self.capacity
                first = min(k, self.capacity - start)
                self._data[:, start : start + first] = chunk[:, :first]
                if first < k:
                    self._data[:, : k - first] = chunk[:, first:]
            self._written += k
        return self

    def read(self, start_sample, n_samples):
        """Copy an absolute sample range [start, start + n) out of the buffer."""
        if n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        with self._lock:
            end = start_sample + n_samples
            if end > self._written:
                raise FutureRangeError(
                    f"range [{start_sample}, {end}) not yet written "
                    f"(counter at {self._written})"
                )
            if start_sample < self._written - self.capacity:
                raise OverwrittenRangeError(
                    f"range [{start_sample}, {end}) has been overwritten "
                    f"(oldest resident sample is {self._written - self.capacity})"
                )
            idx = (start_sample + np.arange(n_samples)) % self.capacity
            return self._data[:, idx].copy()


def extract_epoch(buffer, start_sample, offset_s, length_s, sample_rate):
    """Pull an epoch out of the stream, relative to a trial start sample.

    The offline convention (offset 0.14 s, length 3.86 s) yields 1930
    samples at 500 Hz; the online convention (offset 0, length 3.0 s)
    yields 1500.
    """
    offset = int(round(offset_s * sample_rate))
    n = int(round(length_s * sample_rate))
    return buffer.read(start_sample + offset, n)


def itr(p, n_targets, t_c_seconds):
    """Information transfer rate in bits/min.

    The x*log2(x) terms take their limits (0) at p in {0, 1}; results
    below chance level clamp to 0, since the raw formula turns positive
    again for very poor accuracies and would misrepresent throughput.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("accuracy must lie in [0, 1]")
    if n_targets < 2:
        raise ValueError("n_targets must be >= 2")
    if t_c_seconds <= 0:
        raise ValueError("t_c_seconds must be positive")
    if p <= 1.0 / n_targets:
        return 0.0
    bits = math.log2(n_targets)
    if p < 1.0:
        bits += p * math.log2(p) + (1.0 - p) * math.log2((1.0 - p) / (n_targets - 1))
    return max(0.0, bits) * 60.0 / t_c_seconds


@dataclass
class TrialRecord:
    trial_id: int
    method: str
    target_class: int
    predicted_class: int
    layout: np.ndarray
    decode_window_s: float
    round_index: int = 0
    window_predictions: dict = field(default_factory=dict)
    below_threshold: bool = False

    @property
    def correct(self):
        return self.predicted_class == self.target_class

    def to_json(self):
        return json.dumps(
            {
                "trial_id": int(self.trial_id),
                "round": int(self.round_index),
                "method": self.method,
                "target_class": int(self.target_class),
                "predicted_class": int(self.predicted_class),
                "layout": [[int(x), int(y)] for x, y in self.layout],
                "decode_window_s": float(self.decode_window_s),
                "window_predictions": {
                    f"{w:.1f}": int(p) for w, p in sorted(self.window_predictions.items())
                },
                "below_threshold": bool(self.below_threshold),
            },
            sort_keys=True,
        )


@dataclass
class SessionMetrics:
    method: str
    n_trials: int
    decode_window_s: float
    attention_shift_s: float
    accuracy: float
    accuracy_std: float
    itr_bits_per_min: float
    window_accuracy: dict
    window_accuracy_std: dict
    window_itr: dict
    window_itr_std: dict

    @property
    def t_c_seconds(self):
        return self.decode_window_s + self.attention_shift_s


class OnlineSimulator:
    """Runs trials and sessions against in-memory components.

    Parameters
    ----------
    decoder : object with a ``predict((n, C, T)) -> labels`` method.
    recommenders : mapping with keys "JOLI" and "LOO" (the "NO" baseline
        needs no model).
    synthesizer : SignalSynthesizer
    reward_config : RewardConfig used to assess realized layouts (the
        full three-factor configuration, independent of what a
        recommender optimizes).
    """

    def __init__(self, decoder, recommenders, synthesizer, reward_config,
                 windows=DEFAULT_WINDOWS, decode_window_s=ONLINE_WINDOW_S,
                 chunk_samples=100, buffer_seconds=BUFFER_SECONDS):
        self.decoder = decoder
        self.recommenders = dict(recommenders)
        self.synthesizer = synthesizer
        self.reward_config = reward_config
        self.windows = tuple(windows)
        self.decode_window_s = float(decode_window_s)
        if self.decode_window_s not in self.windows:
            self.windows = tuple(sorted(set(self.windows) | {self.decode_window_s}))
        self.chunk_samples = int(chunk_samples)
        self.sample_rate = synthesizer.config.sample_rate
        self.buffer = RingBuffer(N_CHANNELS, int(round(buffer_seconds * self.sample_rate)))
        self._trial_counter = 0

    # -- streaming helpers ----------------------------------------------

    def _background(self, duration_s, rng):
        n = int(round(duration_s * self.sample_rate))
        sigma = self.synthesizer.config.noise_sigma
        return sigma * np.stack([pink_noise(n, rng) for _ in range(N_CHANNELS)])

    def _stream(self, signal):
        for start in range(0, signal.shape[1], self.chunk_samples):
            self.buffer.append(signal[:, start : start + self.chunk_samples])

    def _decode(self, epoch, target_class):
        del target_class  # ground truth never reaches the real decoder
        return int(np.asarray(self.decoder.predict(epoch[None]))[0])

    # -- trial / session ------------------------------------------------

    def _layout_for(self, context, method, rng):
        if method == METHOD_NO:
            return no_layout(context), False
        if method not in self.recommenders or self.recommenders[method] is None:
            raise ValueError(f"no recommender configured for method {method}")
        rec = self.recommenders[method].recommend(context, seed=rng)
        return rec.positions, rec.below_threshold

    def run_trial(self, context, method, target_class, rng, round_index=0):
        """Execute the phase sequence for one trial and decode it."""
        if method not in ALL_METHODS:
            raise ValueError(f"unknown method {method!r}")
        trial_id = self._trial_counter
        self._trial_counter += 1

        # scene capture + layout recommendation
        self._stream(self._background(PHASE_CAPTURE_S, rng))
        positions, below = self._layout_for(context, method, rng)
        # target cue
        self._stream(self._background(PHASE_CUE_S, rng))
        # stimulus phase: synthesize the attended stimulus's response
        assessments = assess_layout(
            context.grid, positions, context.objects, self.reward_config
        )
        target_assessment = assessments[target_class]
        condition = TrialCondition(
            luminance=min(1.0, max(0.0, target_assessment.luminance)),
            isd_deg=target_assessment.nearest_neighbor_deg,
        )
        signal = self.synthesizer.trial(target_class, condition, PHASE_STIMULUS_S, rng)
        start_sample = self.buffer.total_written
        self._stream(signal)

        predictions = {}
        for w in self.windows:
            epoch = extract_epoch(self.buffer, start_sample, 0.0, w, self.sample_rate)
            predictions[w] = self._decode(epoch, target_class)
        # feedback phase
        self._stream(self._background(PHASE_FEEDBACK_S, rng))

        return TrialRecord(
            trial_id=trial_id,
            method=method,
            target_class=int(target_class),
            predicted_class=predictions[self.decode_window_s],
            layout=np.asarray(positions),
            decode_window_s=self.decode_window_s,
            round_index=round_index,
            window_predictions=predictions,
            below_threshold=below,
        )

    def simulate_session(self, contexts, methods=ALL_METHODS, n_rounds=1, seed=0):
        """Rounds of six trials per method; methods shuffled per round.

        Each round fixes one scene context; every target is cued exactly
        once per method per round.  Returns (metrics per method, records).
        """
        contexts = list(contexts)
        if not contexts:
            raise ValueError("at least one scene context is required")
        rng = named_rng(seed, "session")
        records = []
        for rnd in range(n_rounds):
            context = contexts[rnd % len(contexts)]
            order = [methods[i] for i in rng.permutation(len(methods))]
            for method in order:
                targets = rng.permutation(context.n_objects)
                for target in targets:
                    records.append(
                        self.run_trial(context, method, int(target), rng, round_index=rnd)
                    )
        metrics = {
            m: self.compute_metrics([r for r in records if r.method == m])
            for m in methods
        }
        return metrics, records

    def compute_metrics(self, records):
        if not records:
            raise ValueError("no records to aggregate")
        method = records[0].method
        n_targets = max(r.target_class for r in records) + 1
        n_targets = max(n_targets, 2)
        acc = {}
        acc_std = {}
        witr = {}
        witr_std = {}
        rounds = sorted({r.round_index for r in records})
        for w in self.windows:
            hits = np.array([r.window_predictions[w] == r.target_class for r in records])
            acc[w] = float(hits.mean())
            t_c = w + ATTENTION_SHIFT_S
            witr[w] = itr(acc[w], n_targets, t_c)
            per_round_acc = []
            for rnd in rounds:
                sub = [r for r in records if r.round_index == rnd]
                per_round_acc.append(
                    float(np.mean([r.window_predictions[w] == r.target_class for r in sub]))
                )
            acc_std[w] = float(np.std(per_round_acc))
            witr_std[w] = float(np.std([itr(a, n_targets, t_c) for a in per_round_acc]))
        w0 = self.decode_window_s
        return SessionMetrics(
            method=method,
            n_trials=len(records),
            decode_window_s=w0,
            attention_shift_s=ATTENTION_SHIFT_S,
            accuracy=acc[w0],
            accuracy_std=acc_std[w0],
            itr_bits_per_min=witr[w0],
            window_accuracy=acc,
            window_accuracy_std=acc_std,
            window_itr=witr,
            window_itr_std=witr_std,
        )


def metrics_to_csv(metrics_by_method, windows=DEFAULT_WINDOWS):
    """Render the session summary as a method-by-duration table:
    one row per (metric, method), one column per input duration, cells
    formatted ``mean (std)``.
    """
    methods = [m for m in ALL_METHODS if m in metrics_by_method]
    header = ["metric", "method"] + [f"{w:.1f} s" for w in windows]
    lines = [",".join(header)]
    for metric in ("ACC", "ITR"):
        for m in methods:
            sm = metrics_by_method[m]
            cells = []
            for w in windows:
                if metric == "ACC":
                    cells.append(f"{sm.window_accuracy[w]:.2f} ({sm.window_accuracy_std[w]:.2f})")
                else:
                    cells.append(f"{sm.window_itr[w]:.2f} ({sm.window_itr_std[w]:.2f})")
            lines.append(",".join([metric, m] + cells))
    return "\n".join(lines) + "\n"


def records_to_jsonl(records):
    return "".join(r.to_json() + "\n" for r in records)
