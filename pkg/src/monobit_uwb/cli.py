"""Command-line interface: sweep, gen-channels, decode, selftest."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .channel import (SvParams, align_support, generate_sv_channel, load_channel,
                      make_p_ref, save_channel, single_tap_channel)
from .coding import GeneratorSpec, build_trellis, encode, modulate
from .decoder import candidate_window, trace_joint_decode, traceback
from .frontend import quantize, reference_samples, scale_for_snr, synthesize_noiseless
from .harness import MODES, ExperimentConfig, emit_plot, run_sweep, write_csv
from .waveform import PulseSpec

_CONFIG_KEYS = {
    "mode", "g", "expand_q", "snr", "frames", "realizations", "bits_per_frame",
    "seed", "channel", "channel_dir", "bandwidth_ghz", "ts_ns", "tau_ns",
    "target_errors", "cascade_depth", "cascade_delay", "threads", "out", "plot",
}


def _parse_snr(text: str) -> tuple[float, ...]:
    """Either 'start:stop:step' (inclusive) or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"bad SNR range {text!r}: expected start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("SNR range step must be positive")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        if count < 1:
            raise ValueError(f"empty SNR range {text!r}")
        return tuple(start + i * step for i in range(count))
    return tuple(float(p) for p in text.split(","))


def _parse_g(text: str) -> tuple[int, int]:
    parts = text.replace(" ", "").split(",")
    if len(parts) != 2:
        raise ValueError(f"bad generator {text!r}: expected two octal polynomials")
    return int(parts[0], 8), int(parts[1], 8)


def _load_config_file(path: str) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown option {key!r}")
        values[key] = value.strip()
    return values


def _add_sweep_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; explicit flags override it")
    p.add_argument("--mode", default=None,
                   help=f"comma-separated list from {{{','.join(MODES)}}}")
    p.add_argument("--g", default=None, help="octal generator pair, e.g. 171,133")
    p.add_argument("--expand-q", type=int, default=None,
                   help="extra state bits for the joint decoder trellis")
    p.add_argument("--snr", default=None, help="dB list '4,6,8' or range '4:14:2'")
    p.add_argument("--frames", type=int, default=None, help="frames per realization")
    p.add_argument("--realizations", type=int, default=None)
    p.add_argument("--bits-per-frame", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--channel", default=None, choices=("cm1", "single-tap"))
    p.add_argument("--channel-dir", default=None,
                   help="directory of channel tap files (overrides --channel)")
    p.add_argument("--bandwidth-ghz", type=float, default=None)
    p.add_argument("--ts-ns", type=float, default=None, help="symbol period in ns")
    p.add_argument("--tau-ns", type=float, default=None, help="pulse constant in ns")
    p.add_argument("--target-errors", type=int, default=None,
                   help="early-stop error count per point (0 disables)")
    p.add_argument("--cascade-depth", type=int, default=None)
    p.add_argument("--cascade-delay", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", default=None, help="CSV output path")
    p.add_argument("--plot", default=None, help="figure output path (svg/pdf/png)")


_SWEEP_DEFAULTS = {
    "mode": "joint", "g": "171,133", "expand_q": 0, "snr": "2:12:2",
    "frames": 50, "realizations": 10, "bits_per_frame": 500, "seed": 1,
    "channel": "cm1", "channel_dir": None, "bandwidth_ghz": 5.0, "ts_ns": 1.0,
    "tau_ns": 0.22, "target_errors": 200, "cascade_depth": 6, "cascade_delay": 24,
    "threads": None, "out": None, "plot": None,
}

_INT_KEYS = {"expand_q", "frames", "realizations", "bits_per_frame", "seed",
             "target_errors", "cascade_depth", "cascade_delay", "threads"}
_FLOAT_KEYS = {"bandwidth_ghz", "ts_ns", "tau_ns"}


def _merge_sweep_options(args: argparse.Namespace) -> dict:
    merged = dict(_SWEEP_DEFAULTS)
    if args.config:
        for key, text in _load_config_file(args.config).items():
            if key in _INT_KEYS:
                merged[key] = int(text)
            elif key in _FLOAT_KEYS:
                merged[key] = float(text)
            else:
                merged[key] = text
    for key in _SWEEP_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _cmd_sweep(args: argparse.Namespace) -> int:
    opt = _merge_sweep_options(args)
    modes = [m.strip() for m in str(opt["mode"]).split(",") if m.strip()]
    for mode in modes:
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    if opt["channel_dir"]:
        files = sorted(str(p) for p in Path(opt["channel_dir"]).glob("*.txt"))
        if not files:
            raise ValueError(f"no *.txt channel files in {opt['channel_dir']}")
        kind, channel_files = "files", tuple(files)
    else:
        kind = "sv" if opt["channel"] == "cm1" else "single-tap"
        channel_files = ()

    points = []
    for mode in modes:
        config = ExperimentConfig(
            mode=mode,
            generator=_parse_g(str(opt["g"])),
            expand_q=int(opt["expand_q"]),
            snr_db=_parse_snr(str(opt["snr"])),
            realizations=int(opt["realizations"]),
            frames_per_realization=int(opt["frames"]),
            bits_per_frame=int(opt["bits_per_frame"]),
            channel_kind=kind,
            channel_files=channel_files,
            bandwidth=float(opt["bandwidth_ghz"]) * 1e9,
            symbol_period=float(opt["ts_ns"]) * 1e-9,
            pulse_tau=float(opt["tau_ns"]) * 1e-9,
            master_seed=int(opt["seed"]),
            target_errors=int(opt["target_errors"]),
            cascade_depth=int(opt["cascade_depth"]),
            cascade_delay=int(opt["cascade_delay"]),
            threads=opt["threads"],
            out_csv=opt["out"],
            out_plot=opt["plot"],
        )
        pts = run_sweep(config)
        points.extend(pts)
        for p in pts:
            ber = "n/a" if p.bits_total == 0 else f"{p.ber:.3e}"
            print(f"{p.mode:9s} {p.eb_n0_db:6.2f} dB  bits={p.bits_total:<9d} "
                  f"errors={p.bit_errors:<6d} ber={ber}")
    if opt["out"]:
        write_csv(points, opt["out"])
        print(f"wrote {opt['out']}")
    if opt["plot"]:
        emit_plot(points, opt["plot"])
        print(f"wrote {opt['plot']}")
    return 0


def _cmd_gen_channels(args: argparse.Namespace) -> int:
    params = SvParams(
        cluster_rate=args.cluster_rate, ray_rate=args.ray_rate,
        cluster_decay=args.cluster_decay, ray_decay=args.ray_decay,
        lognormal_sigma_cluster=args.sigma_db, lognormal_sigma_ray=args.sigma_db,
        max_span=args.max_span_ns)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    from .harness import channel_seeds
    for i, seed in enumerate(channel_seeds(args.seed, args.count)):
        ch = generate_sv_channel(params, seed)
        save_channel(ch, out_dir / f"cm1_{i:03d}.txt")
    print(f"wrote {args.count} channel files to {out_dir}")
    return 0


def _cmd_decode(args: argparse.Namespace) -> int:
    g = GeneratorSpec(_parse_g(args.g))
    trellis = build_trellis(g, args.expand_q)
    bandwidth = args.bandwidth_ghz * 1e9
    t = 1.0 / (2.0 * bandwidth)
    ts = args.ts_ns * 1e-9
    n = round(ts / t)
    pulse = PulseSpec(args.tau_ns * 1e-9)
    if args.channel_file:
        ch = load_channel(args.channel_file)
    else:
        ch = single_tap_channel()
    p_ref = align_support(make_p_ref(pulse, ch, bandwidth))
    budget = scale_for_snr(p_ref, args.snr, t)

    rng = np.random.default_rng(args.seed)
    info = rng.integers(0, 2, size=args.bits).astype(np.uint8)
    symbols = modulate(encode(info, g))
    w = synthesize_noiseless(symbols, p_ref, budget.amplitude, t, n)
    frame = quantize(w, rng, t)
    trace = trace_joint_decode(frame, trellis, p_ref, budget.amplitude)

    print(f"channel t_max={ch.t_max * 1e9:.2f} ns  states={trellis.n_states}  "
          f"A={budget.amplitude:.4f}  N={n}")
    print(f"{'step':>4s} {'best state':>10s} {'best metric':>14s} {'spread':>10s}")
    for k in range(1, trace.metrics.shape[0]):
        row = trace.metrics[k]
        finite = row[np.isfinite(row)]
        best = int(np.argmax(row))
        spread = float(finite.max() - finite.min()) if finite.size > 1 else 0.0
        print(f"{k:4d} {best:10d} {row[best]:14.4f} {spread:10.4f}")
    errors = int(np.count_nonzero(trace.decoded != info))
    print(f"decoded:  {''.join(map(str, trace.decoded))}")
    print(f"sent:     {''.join(map(str, info))}")
    print(f"bit errors: {errors}/{args.bits}")
    return 0


def _worked_example_ok(verbose: bool = True) -> bool:
    """Replay the g=[5,7] first-step waveform construction and traceback."""
    g = GeneratorSpec((0o5, 0o7))
    trellis = build_trellis(g, 0)
    bandwidth = 5e9
    t = 1.0 / (2.0 * bandwidth)
    ts = 1e-9
    n = round(ts / t)
    p_ref = align_support(make_p_ref(PulseSpec(0.22e-9), single_tap_channel(), bandwidth))
    rho = reference_samples(p_ref, t)

    ok = True
    expected = {0: -1.0, 2: +1.0}   # input 0 -> s0 with -p-p, input 1 -> s2 with +p+p
    for b, (state, sign) in zip((0, 1), expected.items()):
        cand = candidate_window(np.zeros(0), rho, n,
                                2.0 * trellis.code_bits[0, b, 0] - 1.0,
                                2.0 * trellis.code_bits[0, b, 1] - 1.0)
        direct = sign * (rho[:2 * n] + np.concatenate([np.zeros(n), rho[:n]]))
        if int(trellis.next_state[0, b]) != state or not np.array_equal(cand, direct):
            ok = False
    # forced survivor path s0 -> s2 -> s1 -> s0
    pred = np.zeros((3, 4), dtype=np.int32)
    bits = np.zeros((3, 4), dtype=np.uint8)
    pred[0, 2], bits[0, 2] = 0, 1
    pred[1, 1], bits[1, 1] = 2, 0
    pred[2, 0], bits[2, 0] = 1, 0
    decoded = traceback(pred, bits, 0)
    ok = ok and decoded.tolist() == [1, 0, 0]
    if verbose:
        verdict = "PASS" if ok else "FAIL"
        print(f"worked example (s0->s2->s1->s0 => 1,0,0): {verdict}")
    return ok


def _small_ml_ok(verbose: bool = True) -> bool:
    """Joint decoder equals exhaustive ML on small frames with short ISI."""
    from .decoder import branch_metric, joint_viterbi_dfe
    from .frontend import MonobitFrame

    g = GeneratorSpec((0o5, 0o7))
    trellis = build_trellis(g, 1)
    n = 4
    t = 1.0
    rng = np.random.default_rng(7)
    rho = np.array([1.0, 0.6, -0.3, 0.2, 0.35, -0.15, 0.1, -0.05, 0.15, 0.05, -0.1, 0.05])
    amplitude = 1.0
    u = 6
    ok = True
    for _ in range(10):
        info = rng.integers(0, 2, size=u).astype(np.uint8)
        w = synthesize_noiseless(modulate(encode(info, g)), rho, amplitude, t, n)
        frame = quantize(w, rng, t)
        decoded = joint_viterbi_dfe(frame, trellis, rho, amplitude)
        best, best_bits = -np.inf, None
        r_flat = frame.samples.reshape(-1)
        for cand in range(1 << u):
            bits = np.array([(cand >> (u - 1 - i)) & 1 for i in range(u)], dtype=np.uint8)
            wc = synthesize_noiseless(modulate(encode(bits, g)), rho, amplitude, t, n)
            score = branch_metric(r_flat, wc.reshape(-1))
            if score > best:
                best, best_bits = score, bits
        if not np.array_equal(decoded, best_bits):
            ok = False
    if verbose:
        print(f"small-instance ML equivalence (10 frames): {'PASS' if ok else 'FAIL'}")
    return ok


def _cmd_selftest(_args: argparse.Namespace) -> int:
    ok = _worked_example_ok()
    ok = _small_ml_ok() and ok
    print("selftest:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def cli_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="monobit-uwb",
        description="Monte Carlo BER experiments for 1-bit quantized UWB receivers "
                    "with joint Viterbi decoding and decision-feedback equalization.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a BER sweep")
    _add_sweep_args(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_gen = sub.add_parser("gen-channels", help="write channel realization files")
    p_gen.add_argument("--count", type=int, required=True)
    p_gen.add_argument("--seed", type=int, default=1)
    p_gen.add_argument("--out-dir", required=True)
    p_gen.add_argument("--cluster-rate", type=float, default=0.0233)
    p_gen.add_argument("--ray-rate", type=float, default=2.5)
    p_gen.add_argument("--cluster-decay", type=float, default=7.1)
    p_gen.add_argument("--ray-decay", type=float, default=4.3)
    p_gen.add_argument("--sigma-db", type=float, default=3.3941)
    p_gen.add_argument("--max-span-ns", type=float, default=120.0)
    p_gen.set_defaults(func=_cmd_gen_channels)

    p_dec = sub.add_parser("decode", help="single-frame debug decode (per-step metrics)")
    p_dec.add_argument("--g", default="5,7")
    p_dec.add_argument("--expand-q", type=int, default=0)
    p_dec.add_argument("--snr", type=float, default=8.0)
    p_dec.add_argument("--bits", type=int, default=16)
    p_dec.add_argument("--seed", type=int, default=1)
    p_dec.add_argument("--channel-file", default=None)
    p_dec.add_argument("--bandwidth-ghz", type=float, default=5.0)
    p_dec.add_argument("--ts-ns", type=float, default=1.0)
    p_dec.add_argument("--tau-ns", type=float, default=0.22)
    p_dec.set_defaults(func=_cmd_decode)

    p_self = sub.add_parser("selftest", help="run the built-in worked example and "
                                             "small-instance ML checks")
    p_self.set_defaults(func=_cmd_selftest)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
