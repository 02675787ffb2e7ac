"""Command-line entry point.

Subcommands cover the full pipeline: luminance extraction, synthetic
scene generation, bandit training, layout recommendation, the simulated
online session, decoder training, and spectral analysis.  All
randomness flows from a single ``--seed`` through named per-module
streams, so every command is reproducible byte-for-byte in its primary
outputs.

Exit codes: 0 success, 2 input error, 3 state/model error, 4 protocol
error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .bandit import ContextGrid, LinUcbBandit, build_features_batch
from .decoder import FuzzyDecoder
from .eegio import read_dataset, read_epoch, write_dataset
from .filters import amplitude_spectrum, spectrum_to_csv
from .imgio import read_ppm, read_rgb24, save_grid_json, write_pgm16, write_ppm
from .luminance import DEFAULT_GAMMA, DEFAULT_GRID_SIZE, clip_to_grid
from .recommend import LayoutRecommender, Recommendation, loo_reward_config, no_layout
from .rewards import RewardConfig, RewardCurves, layout_reward_from_features
from .sampling import SamplerConfig, sample_feasible_layouts
from .scenes import SCENE_KINDS, generate_clip, generate_context, place_objects
from .session import (
    ALL_METHODS,
    DEFAULT_WINDOWS,
    ONLINE_WINDOW_S,
    OnlineSimulator,
    metrics_to_csv,
    records_to_jsonl,
)
from .synth import (
    N_CHANNELS,
    N_CLASSES,
    SignalSynthesizer,
    TrialCondition,
    HIGH_QUALITY,
    OZ_INDEX,
    CHANNELS,
    spread_conditions,
)
from .validation import named_rng

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_STATE = 3
EXIT_PROTOCOL = 4


class InputError(Exception):
    exit_code = EXIT_INPUT


class StateError(Exception):
    exit_code = EXIT_STATE


def _parse_size(text):
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except Exception as exc:
        raise InputError(f"--size must look like 1920x1080, got {text!r}") from exc


def _load_frames(path, size=None):
    """A clip from a PPM file, raw RGB24 dump, or a directory of frames."""
    if not os.path.exists(path):
        raise InputError(f"no such file or directory: {path}")
    if os.path.isdir(path):
        names = sorted(
            n for n in os.listdir(path) if n.endswith((".ppm", ".rgb"))
        )
        if not names:
            raise InputError(f"no .ppm or .rgb frames in {path}")
        return [_load_single(os.path.join(path, n), size) for n in names]
    return [_load_single(path, size)]


def _load_single(path, size=None):
    try:
        if path.endswith(".ppm"):
            return read_ppm(path)
        if path.endswith(".rgb"):
            if size is None:
                raise InputError(f"raw RGB24 input {path} requires --size WxH")
            return read_rgb24(path, size[0], size[1])
        raise InputError(f"unsupported image format: {path}")
    except InputError:
        raise
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot decode {path}: {exc}") from exc


def _load_bandit(path):
    try:
        return LinUcbBandit.load(path)
    except FileNotFoundError as exc:
        raise StateError(f"no such state file: {path}") from exc
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise StateError(f"corrupt bandit state {path}: {exc}") from exc


def _load_decoder(path):
    try:
        return FuzzyDecoder.load(path)
    except FileNotFoundError as exc:
        raise StateError(f"no such model file: {path}") from exc
    except (ValueError, KeyError, RuntimeError, json.JSONDecodeError) as exc:
        raise StateError(f"corrupt decoder model {path}: {exc}") from exc


def _reward_config(args, method="joli"):
    config = RewardConfig(
        alpha=args.alpha,
        n_stimuli=args.stimuli,
        degrees_per_cell=args.degrees_per_cell,
    )
    if method == "loo":
        config = loo_reward_config(config)
    return config


def _scene_context(args, seed_name="scene"):
    """Context from --scene path (plus seeded random objects) for commands
    that need a full context."""
    frames = _load_frames(args.scene, getattr(args, "size", None))
    grid = clip_to_grid(frames, n_g=args.grid, gamma=args.gamma)
    rng = named_rng(args.seed, seed_name)
    if getattr(args, "objects", None):
        with open(args.objects, "r", encoding="utf-8") as fh:
            objects = np.asarray(json.load(fh), dtype=np.int64)
    else:
        objects = place_objects(rng, args.grid, args.stimuli)
    return ContextGrid(grid=grid, objects=objects)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_luminance(args):
    frames = _load_frames(args.input, args.size)
    maps_grid = clip_to_grid(frames, n_g=args.grid, gamma=args.gamma)
    from .luminance import average_clip, frame_luminance

    mean_map, _ = average_clip([frame_luminance(f, gamma=args.gamma) for f in frames])
    save_grid_json(args.out + ".grid.json", maps_grid)
    write_pgm16(args.out + ".heat.pgm", mean_map)
    print(f"wrote {args.out}.grid.json and {args.out}.heat.pgm "
          f"({len(frames)} frame(s), grid {args.grid}x{args.grid})")
    return EXIT_OK


def cmd_gen_scenes(args):
    rng = named_rng(args.seed, "scene-gen")
    os.makedirs(args.out, exist_ok=True)
    kinds = args.kinds.split(",") if args.kinds else list(SCENE_KINDS)
    for k in kinds:
        if k not in SCENE_KINDS:
            raise InputError(f"unknown scene kind {k!r}; choose from {SCENE_KINDS}")
    for i in range(args.count):
        kind = kinds[i % len(kinds)]
        frames = generate_clip(rng, kind=kind, width=args.size[0],
                               height=args.size[1], n_frames=args.frames)
        scene_dir = os.path.join(args.out, f"scene_{i:03d}")
        os.makedirs(scene_dir, exist_ok=True)
        for j, frame in enumerate(frames):
            write_ppm(os.path.join(scene_dir, f"frame_{j:02d}.ppm"), frame)
    print(f"wrote {args.count} scene clip(s) under {args.out}")
    return EXIT_OK


def _train_bandit_on_scenes(args, config, curves):
    scene_dirs = sorted(
        os.path.join(args.scenes, d)
        for d in os.listdir(args.scenes)
        if os.path.isdir(os.path.join(args.scenes, d))
    )
    if not scene_dirs:
        # a flat directory of single images also works
        scene_dirs = sorted(
            os.path.join(args.scenes, f)
            for f in os.listdir(args.scenes)
            if f.endswith((".ppm", ".rgb"))
        )
    if not scene_dirs:
        raise InputError(f"no scenes found in {args.scenes}")
    rng = named_rng(args.seed, "bandit-train")
    model = LinUcbBandit(dim=3 * args.stimuli, lam=args.lam)
    feats_all, rewards_all = [], []
    arms_per_context = max(1, args.samples // max(1, len(scene_dirs)))
    consumed = 0
    for path in scene_dirs:
        frames = _load_frames(path, args.size)
        grid = clip_to_grid(frames, n_g=args.grid, gamma=args.gamma)
        objects = place_objects(rng, args.grid, args.stimuli)
        context = ContextGrid(grid=grid, objects=objects)
        take = min(arms_per_context, args.samples - consumed)
        if take <= 0:
            break
        arms = sample_feasible_layouts(context, config.d_max, take, rng)
        feats = build_features_batch(context, arms, curves, config)
        feats_all.append(feats)
        rewards_all.append(layout_reward_from_features(feats, config))
        consumed += take
    X = np.concatenate(feats_all)
    y = np.concatenate(rewards_all)
    model.fit(X, y)
    print(f"trained on {model.observation_count_} samples from {len(scene_dirs)} scene(s)")
    return model


def _train_bandit_synthetic(args):
    """Linear-recovery benchmark: known parameter vector, noisy rewards."""
    rng = named_rng(args.seed, "bandit-synthetic")
    dim = 3 * args.stimuli
    theta_star = rng.uniform(0.0, 1.0 / dim, size=dim) * 3.0
    X = rng.uniform(0.0, 1.0, size=(args.synthetic, dim))
    y = X @ theta_star + rng.normal(0.0, 0.05, size=args.synthetic)
    model = LinUcbBandit(dim=dim, lam=args.lam).fit(X, y)
    err = float(np.linalg.norm(model.theta_ - theta_star))
    print(f"synthetic linear task: {args.synthetic} samples, "
          f"recovery error |theta - theta*| = {err:.6f}")
    return model


def cmd_train_bandit(args):
    curves = RewardCurves()
    config = _reward_config(args, method=args.method)
    if args.synthetic is not None:
        if args.synthetic < 1:
            raise InputError("--synthetic requires at least one sample")
        model = _train_bandit_synthetic(args)
    elif args.scenes:
        if args.samples < 1:
            raise InputError("--samples must be >= 1")
        model = _train_bandit_on_scenes(args, config, curves)
    else:
        raise InputError("one of --scenes or --synthetic is required")
    model.save(args.out)
    print(f"state written to {args.out} (observations: {model.observation_count_})")
    return EXIT_OK


def _overlay_pgm(context, positions, path, scale=16):
    """Grid heatmap with object cells boxed gray and stimulus cells white."""
    canvas = np.kron(context.grid, np.ones((scale, scale)))

    def box(cell, value, thickness):
        x, y = int(cell[0]), int(cell[1])
        r0, r1 = y * scale, (y + 1) * scale
        c0, c1 = x * scale, (x + 1) * scale
        canvas[r0 : r0 + thickness, c0:c1] = value
        canvas[r1 - thickness : r1, c0:c1] = value
        canvas[r0:r1, c0 : c0 + thickness] = value
        canvas[r0:r1, c1 - thickness : c1] = value

    for obj in context.objects:
        box(obj, 0.5, 2)
    for pos in positions:
        box(pos, 1.0, 3)
    write_pgm16(path, np.clip(canvas, 0.0, 1.0))


def cmd_recommend(args):
    config = _reward_config(args, method=args.method)
    context = _scene_context(args)
    if args.method == "no":
        rec = Recommendation(
            positions=no_layout(context),
            predicted_reward=0.0,
            below_threshold=False,
            batches_used=0,
        )
    else:
        if not args.state:
            raise InputError(f"--state is required for method {args.method}")
        bandit = _load_bandit(args.state)
        recommender = LayoutRecommender(
            bandit=bandit,
            curves=RewardCurves(),
            reward_config=config,
            sampler=SamplerConfig(
                batch_size=args.batch, threshold=args.threshold, seed=args.seed
            ),
        )
        rec = recommender.recommend(context, seed=args.seed)
    with open(args.out + ".layout.json", "w", encoding="utf-8") as fh:
        fh.write(rec.to_json() + "\n")
    _overlay_pgm(context, rec.positions, args.out + ".overlay.pgm")
    print(f"layout written to {args.out}.layout.json "
          f"(predicted reward {rec.predicted_reward:.4f}, "
          f"below_threshold={rec.below_threshold})")
    return EXIT_OK


def _train_session_bandits(args, curves, rng_seed):
    joli_config = _reward_config(args, method="joli")
    loo_config = _reward_config(args, method="loo")
    out = {}
    for name, config in (("JOLI", joli_config), ("LOO", loo_config)):
        rng = named_rng(rng_seed, f"sim-bandit-{name}")
        feats_all, rewards_all = [], []
        remaining = args.train_samples
        while remaining > 0:
            context = generate_context(rng, n_g=args.grid, n_objects=args.stimuli)
            take = min(remaining, 200)
            arms = sample_feasible_layouts(context, config.d_max, take, rng)
            feats = build_features_batch(context, arms, curves, config)
            feats_all.append(feats)
            rewards_all.append(layout_reward_from_features(feats, config))
            remaining -= take
        model = LinUcbBandit(dim=3 * args.stimuli, lam=args.lam)
        model.fit(np.concatenate(feats_all), np.concatenate(rewards_all))
        sampler = SamplerConfig(batch_size=args.batch, threshold=args.threshold, seed=args.seed)
        out[name] = LayoutRecommender(
            bandit=model, curves=curves, reward_config=config, sampler=sampler
        )
    return out


def cmd_simulate(args):
    curves = RewardCurves()
    synthesizer = SignalSynthesizer(curves)
    if args.decoder:
        decoder = _load_decoder(args.decoder)
    else:
        rng = named_rng(args.seed, "sim-decoder-data")
        conditions = spread_conditions(curves)
        X, y = synthesizer.mixed_dataset(
            args.decoder_trials, conditions, args.decoder_duration, rng
        )
        decoder = FuzzyDecoder(max_passes=args.decoder_passes, random_state=args.seed)
        decoder.fit(X, y)
        print(f"decoder trained on {len(y)} synthetic trials "
              f"(final loss {decoder.loss_history_[-1]:.4f})")
    recommenders = _train_session_bandits(args, curves, args.seed)
    simulator = OnlineSimulator(
        decoder=decoder,
        recommenders=recommenders,
        synthesizer=synthesizer,
        reward_config=_reward_config(args, method="joli"),
        decode_window_s=args.window,
    )
    scene_rng = named_rng(args.seed, "sim-scenes")
    contexts = [
        generate_context(scene_rng, n_g=args.grid, n_objects=args.stimuli)
        for _ in range(args.rounds)
    ]
    metrics, records = simulator.simulate_session(
        contexts, methods=ALL_METHODS, n_rounds=args.rounds, seed=args.seed
    )
    csv_text = metrics_to_csv(metrics, windows=simulator.windows)
    with open(args.out + ".metrics.csv", "w", encoding="utf-8") as fh:
        fh.write(csv_text)
    with open(args.out + ".trials.jsonl", "w", encoding="utf-8") as fh:
        fh.write(records_to_jsonl(records))
    for m in ALL_METHODS:
        sm = metrics[m]
        print(f"{m:>4}: accuracy {sm.accuracy:.3f} at {sm.decode_window_s:.1f} s, "
              f"ITR {sm.itr_bits_per_min:.2f} bits/min over {sm.n_trials} trials")
    print(f"wrote {args.out}.metrics.csv and {args.out}.trials.jsonl")
    return EXIT_OK


def cmd_synth_epochs(args):
    rng = named_rng(args.seed, "synth-epochs")
    synthesizer = SignalSynthesizer()
    condition = TrialCondition(luminance=args.luminance, isd_deg=args.isd)
    X, y = synthesizer.dataset(args.per_class, condition, args.duration, rng)
    write_dataset(args.out, X, y, synthesizer.config.sample_rate)
    print(f"wrote {len(y)} epochs ({args.per_class} per class) to {args.out}")
    return EXIT_OK


def cmd_train_decoder(args):
    if args.dataset:
        try:
            X, y, rate = read_dataset(args.dataset)
        except (FileNotFoundError, ValueError) as exc:
            raise InputError(str(exc)) from exc
        if np.any(y < 0):
            raise InputError("dataset contains unlabeled epochs")
    else:
        if args.per_class < 1:
            raise InputError("--per-class must be >= 1")
        rng = named_rng(args.seed, "decoder-data")
        synthesizer = SignalSynthesizer()
        X, y = synthesizer.dataset(args.per_class, HIGH_QUALITY, args.duration, rng)
        rate = synthesizer.config.sample_rate
    decoder = FuzzyDecoder(
        sample_rate=rate, max_passes=args.passes, random_state=args.seed
    )
    decoder.fit(X, y)
    for i, loss in enumerate(decoder.loss_history_):
        print(f"pass {i + 1:3d}: loss {loss:.5f}")
    train_acc = float((decoder.predict(X) == y).mean())
    print(f"training accuracy {train_acc:.3f} on {len(y)} epochs")
    decoder.save(args.out)
    print(f"model written to {args.out}")
    return EXIT_OK


def cmd_spectrum(args):
    try:
        data, rate, _label = read_epoch(args.epoch)
    except (FileNotFoundError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    if args.firing_strengths:
        if not args.model:
            raise InputError("--firing-strengths requires --model")
        decoder = _load_decoder(args.model)
        strengths = decoder.temporal_firing_strengths(data)
        # average the rule strengths' spectra, dropping each rule's mean
        centered = strengths - strengths.mean(axis=0, keepdims=True)
        freqs, amps = amplitude_spectrum(centered.T, rate)
        spectrum = amps.mean(axis=0)
    else:
        channel = args.channel
        if channel is None:
            idx = OZ_INDEX
        elif channel.isdigit():
            idx = int(channel)
        else:
            if channel not in CHANNELS:
                raise InputError(f"unknown channel {channel!r}; choose from {CHANNELS}")
            idx = CHANNELS.index(channel)
        if not 0 <= idx < data.shape[0]:
            raise InputError(f"channel index {idx} out of range for {data.shape[0]} channels")
        freqs, spectrum = amplitude_spectrum(data[idx], rate)
    spectrum_to_csv(args.out, freqs, spectrum)
    print(f"spectrum written to {args.out} ({len(freqs)} bins, "
          f"resolution {freqs[1] - freqs[0]:.4f} Hz)")
    return EXIT_OK


def cmd_serve(args):
    import threading
    import time as _time

    from .events import serve_events
    from .session import RingBuffer
    from .synth import pink_noise

    if args.model:
        decoder = _load_decoder(args.model)

        def decode_fn(epoch, target):
            return int(decoder.predict(epoch[None])[0])

    else:

        def decode_fn(epoch, target):
            return int(target)

    fs = 500.0
    buffer = RingBuffer(N_CHANNELS, int(8.0 * fs))
    stop = threading.Event()

    def stream_noise():
        # stands in for the amplifier: paced synthetic background chunks
        rng = named_rng(args.seed, "serve-stream")
        chunk = int(fs / 10)
        while not stop.is_set():
            buffer.append(np.stack([pink_noise(chunk, rng) for _ in range(N_CHANNELS)]))
            _time.sleep(chunk / fs)

    streamer = threading.Thread(target=stream_noise, daemon=True)
    streamer.start()
    server = serve_events(buffer, decode_fn, fs, host=args.host, port=args.port)
    host, port = server.server_address
    print(f"event server listening on {host}:{port}, streaming synthetic "
          f"background at {fs:.0f} Hz (Ctrl-C to stop)")
    try:
        server._thread.join()
    except KeyboardInterrupt:
        pass
    finally:
        stop.set()
        server.stop()
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(p, grid=True, stimuli=True):
    p.add_argument("--seed", type=int, default=0, help="master random seed")
    if grid:
        p.add_argument("--grid", type=int, default=DEFAULT_GRID_SIZE,
                       help="luminance grid side length")
    if stimuli:
        p.add_argument("--stimuli", type=int, default=N_CLASSES,
                       help="number of stimulus-object pairs")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="scenelayout",
        description="Scene-aware stimulus layout optimization toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("luminance", help="image/clip -> luminance grid + heatmap")
    p.add_argument("input", help="PPM file, raw .rgb dump, or directory of frames")
    p.add_argument("--size", type=_parse_size, default=None, help="WxH for raw .rgb input")
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    p.add_argument("--out", required=True, help="output prefix")
    _add_common(p, stimuli=False)
    p.set_defaults(func=cmd_luminance)

    p = sub.add_parser("gen-scenes", help="generate synthetic scene clips")
    p.add_argument("--count", type=int, default=6)
    p.add_argument("--kinds", default=None, help="comma-separated scene kinds")
    p.add_argument("--size", type=_parse_size, default=(192, 108))
    p.add_argument("--frames", type=int, default=30)
    p.add_argument("--out", required=True, help="output directory")
    _add_common(p, grid=False, stimuli=False)
    p.set_defaults(func=cmd_gen_scenes)

    p = sub.add_parser("train-bandit", help="fit a layout-scoring bandit")
    p.add_argument("--scenes", default=None, help="directory of scene clips/images")
    p.add_argument("--synthetic", type=int, default=None,
                   help="run the seeded linear-recovery benchmark with N samples")
    p.add_argument("--samples", type=int, default=4000,
                   help="training triplets to draw from --scenes")
    p.add_argument("--size", type=_parse_size, default=None)
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    p.add_argument("--alpha", type=float, default=0.25)
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--degrees-per-cell", type=float, default=4.0)
    p.add_argument("--method", choices=["joli", "loo"], default="joli")
    p.add_argument("--out", required=True, help="state file path")
    _add_common(p)
    p.set_defaults(func=cmd_train_bandit)

    p = sub.add_parser("recommend", help="recommend a layout for a scene")
    p.add_argument("--state", default=None, help="bandit state JSON")
    p.add_argument("--scene", required=True, help="PPM/raw file or clip directory")
    p.add_argument("--size", type=_parse_size, default=None)
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    p.add_argument("--objects", default=None, help="JSON file with object cells")
    p.add_argument("--method", choices=["joli", "loo", "no"], default="joli")
    p.add_argument("--alpha", type=float, default=0.25)
    p.add_argument("--degrees-per-cell", type=float, default=4.0)
    p.add_argument("--batch", type=int, default=2000)
    p.add_argument("--threshold", type=float, default=0.8)
    p.add_argument("--out", required=True, help="output prefix")
    _add_common(p)
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("simulate", help="run simulated online sessions")
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--window", type=float, default=ONLINE_WINDOW_S,
                   help="primary decode window in seconds")
    p.add_argument("--alpha", type=float, default=0.25)
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--degrees-per-cell", type=float, default=4.0)
    p.add_argument("--batch", type=int, default=500,
                   help="candidate batch size (desk-scale default)")
    p.add_argument("--threshold", type=float, default=0.8)
    p.add_argument("--train-samples", type=int, default=3000,
                   help="bandit training triplets per method")
    p.add_argument("--decoder", default=None, help="pretrained decoder model JSON")
    p.add_argument("--decoder-trials", type=int, default=360,
                   help="synthetic trials for the internally trained decoder")
    p.add_argument("--decoder-passes", type=int, default=40)
    p.add_argument("--decoder-duration", type=float, default=3.86)
    p.add_argument("--out", required=True, help="output prefix")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("synth-epochs", help="write synthetic labeled epoch files")
    p.add_argument("--per-class", type=int, default=10)
    p.add_argument("--duration", type=float, default=3.86)
    p.add_argument("--luminance", type=float, default=0.1)
    p.add_argument("--isd", type=float, default=40.0)
    p.add_argument("--out", required=True, help="output directory")
    _add_common(p, grid=False, stimuli=False)
    p.set_defaults(func=cmd_synth_epochs)

    p = sub.add_parser("train-decoder", help="train the fuzzy decoder")
    p.add_argument("--dataset", default=None, help="directory of .eeg epoch files")
    p.add_argument("--per-class", type=int, default=10,
                   help="synthetic trials per class when no dataset is given")
    p.add_argument("--duration", type=float, default=3.86)
    p.add_argument("--passes", type=int, default=80)
    p.add_argument("--out", required=True, help="model file path")
    _add_common(p, grid=False, stimuli=False)
    p.set_defaults(func=cmd_train_decoder)

    p = sub.add_parser("spectrum", help="amplitude spectrum of an epoch")
    p.add_argument("--epoch", required=True, help=".eeg epoch file")
    p.add_argument("--channel", default=None, help="channel name or index (default Oz)")
    p.add_argument("--firing-strengths", action="store_true",
                   help="spectrum of the model's temporal firing strengths")
    p.add_argument("--model", default=None, help="decoder model for --firing-strengths")
    p.add_argument("--out", required=True, help="CSV output path")
    _add_common(p, grid=False, stimuli=False)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("serve", help="run the TCP event/decode server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7459)
    p.add_argument("--model", default=None, help="decoder model JSON (stub if omitted)")
    _add_common(p, grid=False, stimuli=False)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, StateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except BrokenPipeError:
        return EXIT_PROTOCOL


if __name__ == "__main__":
    sys.exit(main())
