"""Monte Carlo BER experiment orchestration, result persistence, and plotting."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import (ChannelRealization, SvParams, align_support, generate_sv_channel,
                      load_channel, make_p_ref, single_tap_channel)
from .coding import GeneratorSpec, Trellis, build_trellis, encode, modulate
from .decoder import (cascade_dfe_viterbi, full_resolution_soft_viterbi,
                      joint_viterbi_dfe, monobit_soft_viterbi_noisi)
from .frontend import add_noise, quantize, reference_samples, synthesize_noiseless
from .waveform import PulseSpec, SampledWaveform

MODES = ("joint", "cascade", "fr-noisi", "mb-noisi")

THREADS_ENV = "MONOBIT_UWB_THREADS"

#: Channel-seed derivation tag, kept distinct from per-frame seed tuples.
_CHANNEL_TAG = 0xC4A1


@dataclass(frozen=True)
class BerPoint:
    """Error counts for one Eb/N0 point; the rate is always recomputed."""

    mode: str
    eb_n0_db: float
    bits_total: int
    bit_errors: int
    realizations: int

    def __post_init__(self):
        if not 0 <= self.bit_errors <= max(self.bits_total, 0):
            raise ValueError("bit_errors must lie in [0, bits_total]")

    @property
    def ber(self) -> float:
        if self.bits_total == 0:
            return float("nan")
        return self.bit_errors / self.bits_total


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a sweep needs; fully determines every random draw."""

    mode: str = "joint"
    generator: tuple[int, int] = (0o171, 0o133)
    expand_q: int = 0
    snr_db: tuple[float, ...] = (2.0, 4.0, 6.0, 8.0, 10.0, 12.0)
    realizations: int = 10
    frames_per_realization: int = 50
    bits_per_frame: int = 500
    channel_kind: str = "sv"                  # "sv" | "files" | "single-tap"
    channel_files: tuple[str, ...] = ()
    sv_params: SvParams = field(default_factory=SvParams)
    bandwidth: float = 5e9
    symbol_period: float = 1e-9
    pulse_tau: float = 0.22e-9
    master_seed: int = 1
    target_errors: int = 200                  # 0 disables early stop
    cascade_depth: int = 6
    cascade_delay: int = 24
    threads: int | None = None
    out_csv: str | None = None
    out_plot: str | None = None

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if len(self.snr_db) == 0:
            raise ValueError("snr_db must not be empty")
        if self.bits_per_frame < 1:
            raise ValueError("bits_per_frame must be at least 1")
        if self.frames_per_realization < 0:
            raise ValueError("frames_per_realization must be non-negative")
        if self.channel_kind not in ("sv", "files", "single-tap"):
            raise ValueError(f"unknown channel kind {self.channel_kind!r}")
        if self.channel_kind == "sv" and self.realizations < 1:
            raise ValueError("realizations must be at least 1")
        if self.channel_kind == "files":
            if not self.channel_files:
                raise ValueError("channel_kind 'files' requires channel_files")
            for f in self.channel_files:
                if not Path(f).is_file():
                    raise ValueError(f"channel file not found: {f}")
        self.samples_per_symbol()

    def sample_period(self) -> float:
        return 1.0 / (2.0 * self.bandwidth)

    def samples_per_symbol(self) -> int:
        t = self.sample_period()
        n = round(self.symbol_period / t)
        if n < 1 or abs(self.symbol_period - n * t) > 1e-6 * t:
            raise ValueError("symbol_period must be an integer multiple of 1/(2B)")
        return n

    def resolve_threads(self) -> int:
        if self.threads is not None:
            return max(1, self.threads)
        env = os.environ.get(THREADS_ENV)
        if env:
            return max(1, int(env))
        return os.cpu_count() or 1

    def channels(self) -> list[ChannelRealization]:
        if self.channel_kind == "single-tap":
            return [single_tap_channel()]
        if self.channel_kind == "files":
            return [load_channel(f) for f in self.channel_files]
        seeds = channel_seeds(self.master_seed, self.realizations)
        return [generate_sv_channel(self.sv_params, s) for s in seeds]


def channel_seeds(master_seed: int, count: int) -> list[int]:
    """Per-realization generator seeds derived from the master seed (kept
    independent of mode and SNR so every curve sees the same channels)."""
    return [int(np.random.SeedSequence([master_seed, _CHANNEL_TAG, i]).generate_state(1)[0])
            for i in range(count)]


@dataclass(frozen=True)
class _PointJob:
    mode: str
    u: int
    n: int
    sample_period: float
    generator: GeneratorSpec
    trellis: Trellis
    rho: np.ndarray
    amplitude: float
    cascade_depth: int
    cascade_delay: int
    master_seed: int
    point_index: int
    realization_index: int


def _frame_errors(job: _PointJob, frame_index: int) -> int:
    seq = np.random.SeedSequence(
        [job.master_seed, job.point_index, job.realization_index, frame_index])
    rng = np.random.default_rng(seq)
    info = rng.integers(0, 2, size=job.u).astype(np.uint8)
    symbols = modulate(encode(info, job.generator))
    w = synthesize_noiseless(symbols, job.rho, job.amplitude,
                             job.sample_period, job.n)
    if job.mode == "fr-noisi":
        y = add_noise(w, rng)
        decoded = full_resolution_soft_viterbi(y, job.trellis, job.rho,
                                               job.amplitude, job.sample_period)
    else:
        frame = quantize(w, rng, job.sample_period)
        if job.mode == "joint":
            decoded = joint_viterbi_dfe(frame, job.trellis, job.rho, job.amplitude)
        elif job.mode == "mb-noisi":
            decoded = monobit_soft_viterbi_noisi(frame, job.trellis, job.rho,
                                                 job.amplitude)
        else:
            decoded = cascade_dfe_viterbi(frame, job.trellis, job.rho,
                                          job.amplitude, job.cascade_depth,
                                          job.cascade_delay)
    return int(np.count_nonzero(decoded != info))


def run_sweep(config: ExperimentConfig) -> list[BerPoint]:
    """Run the configured Monte Carlo sweep and return one BerPoint per SNR.

    Frames are processed in a fixed (realization, frame) order; with early
    stopping enabled the sweep stops after the first frame, in that order,
    that pushes the error count to the target.  Worker threads only speculate
    ahead, so results are identical for any thread count.
    """
    config.validate()
    n = config.samples_per_symbol()
    t = config.sample_period()
    g = GeneratorSpec(config.generator)
    q = config.expand_q if config.mode == "joint" else 0
    trellis = build_trellis(g, q)
    pulse = PulseSpec(config.pulse_tau)

    channels = config.channels()
    rhos = [reference_samples(align_support(make_p_ref(pulse, ch, config.bandwidth)), t)
            for ch in channels]
    energies = [float(np.dot(r, r)) for r in rhos]
    threads = config.resolve_threads()

    points = []
    for pi, snr in enumerate(config.snr_db):
        lin = 10.0 ** (snr / 10.0)
        jobs = []
        for ri, rho in enumerate(rhos):
            amp = float(np.sqrt(lin / energies[ri]))
            jobs.append(_PointJob(config.mode, config.bits_per_frame, n, t, g,
                                  trellis, rho, amp, config.cascade_depth,
                                  config.cascade_delay, config.master_seed, pi, ri))
        units = [(ri, fi) for ri in range(len(jobs))
                 for fi in range(config.frames_per_realization)]
        bits = errors = 0
        used = set()
        target = config.target_errors

        def consume(ri: int, err: int) -> bool:
            nonlocal bits, errors
            bits += config.bits_per_frame
            errors += err
            used.add(ri)
            return bool(target) and errors >= target

        if threads <= 1 or len(units) <= 1:
            for ri, fi in units:
                if consume(ri, _frame_errors(jobs[ri], fi)):
                    break
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = [pool.submit(_frame_errors, jobs[ri], fi)
                           for ri, fi in units]
                for (ri, fi), fut in zip(units, futures):
                    if consume(ri, fut.result()):
                        for f in futures:
                            f.cancel()
                        break
        points.append(BerPoint(config.mode, float(snr), bits, errors, len(used)))
    return points


def write_csv(points, path) -> None:
    """Write 'mode,eb_n0_db,bits,errors,ber' rows with full float precision.

    Counts are exact integers; an empty point (0 bits) reports its rate as
    'n/a'.  Output bytes are a pure function of the points.
    """
    lines = ["mode,eb_n0_db,bits,errors,ber"]
    for p in points:
        ber = "n/a" if p.bits_total == 0 else repr(p.ber)
        lines.append(f"{p.mode},{p.eb_n0_db!r},{p.bits_total},{p.bit_errors},{ber}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> list[BerPoint]:
    """Parse a CSV written by :func:`write_csv` (realization counts are not
    stored and come back as 0)."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != "mode,eb_n0_db,bits,errors,ber":
        raise ValueError(f"{path}: not a monobit-uwb BER table")
    out = []
    for line in lines[1:]:
        mode, snr, bits, errors, _ = line.split(",")
        out.append(BerPoint(mode, float(snr), int(bits), int(errors), 0))
    return out


def emit_plot(points, path) -> None:
    """Render a log-scale BER vs Eb/N0 comparison figure (one labeled curve per
    mode) to a self-contained file; the format follows the extension."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    groups: dict[str, list[BerPoint]] = {}
    for p in points:
        groups.setdefault(p.mode, []).append(p)

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    curves = 0
    for mode, pts in groups.items():
        pts = sorted(pts, key=lambda p: p.eb_n0_db)
        xs = [p.eb_n0_db for p in pts if p.bits_total and p.bit_errors]
        ys = [p.ber for p in pts if p.bits_total and p.bit_errors]
        if xs:
            ax.semilogy(xs, ys, marker="o", label=mode)
            curves += 1
    ax.set_xlabel("Eb/N0 (dB)")
    ax.set_ylabel("BER")
    ax.grid(True, which="both", alpha=0.4)
    if curves:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
