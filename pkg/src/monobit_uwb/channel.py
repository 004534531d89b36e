"""Multipath channel generation, persistence, and the composite reference pulse."""
from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path

import numpy as np

from .waveform import OVERSAMPLING, PulseSpec, SampledWaveform, brickwall_lpf, gaussian2_pulse

_NS = Decimal(10) ** -9


@dataclass(frozen=True)
class ChannelRealization:
    """Sparse tap list (gain, delay in seconds) of the LTI multipath channel."""

    taps: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.taps) == 0:
            raise ValueError("channel must have at least one tap")
        taps = tuple((float(g), float(d)) for g, d in self.taps)
        delays = [d for _, d in taps]
        if any(d < 0.0 for d in delays):
            raise ValueError("tap delays must be non-negative")
        if any(delays[i] > delays[i + 1] for i in range(len(delays) - 1)):
            raise ValueError("tap delays must be sorted ascending")
        if not all(np.isfinite(g) for g, _ in taps):
            raise ValueError("tap gains must be finite")
        object.__setattr__(self, "taps", taps)

    @property
    def t_max(self) -> float:
        return self.taps[-1][1]

    def gains(self) -> np.ndarray:
        return np.array([g for g, _ in self.taps])

    def delays(self) -> np.ndarray:
        return np.array([d for _, d in self.taps])


@dataclass(frozen=True)
class SvParams:
    """Saleh-Valenzuela cluster model parameters (times in ns, rates in 1/ns).

    Defaults are the IEEE 802.15.3a final-report CM1 (LOS, 0-4 m) column.
    """

    cluster_rate: float = 0.0233
    ray_rate: float = 2.5
    cluster_decay: float = 7.1
    ray_decay: float = 4.3
    lognormal_sigma_cluster: float = 3.3941
    lognormal_sigma_ray: float = 3.3941
    max_span: float = 120.0

    def __post_init__(self):
        for name in ("cluster_rate", "ray_rate", "cluster_decay", "ray_decay", "max_span"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


def _poisson_arrivals(rng: np.random.Generator, rate: float, span: float) -> np.ndarray:
    """Arrival times on [0, span] with the first arrival pinned at 0."""
    expected = rate * span
    times = [0.0]
    t = 0.0
    while t <= span:
        gaps = rng.exponential(1.0 / rate, size=max(16, int(expected + 6.0 * np.sqrt(expected) + 1)))
        arr = t + np.cumsum(gaps)
        inside = arr[arr <= span]
        times.extend(inside.tolist())
        if inside.size < arr.size:
            break
        t = arr[-1]
    return np.array(times)


def generate_sv_channel(params: SvParams, seed: int) -> ChannelRealization:
    """Draw one Saleh-Valenzuela realization, deterministically from ``seed``.

    Cluster arrivals are Poisson at ``cluster_rate``; ray arrivals within each
    cluster are Poisson at ``ray_rate``.  Mean tap power decays as
    exp(-T_cluster/cluster_decay) * exp(-tau_ray/ray_decay); per-tap fading is
    lognormal with the combined cluster+ray dB sigma and equiprobable +-1
    polarity.  Taps are truncated at ``max_span`` and the realization is
    normalized to unit total energy.
    """
    rng = np.random.default_rng(seed)
    cluster_times = _poisson_arrivals(rng, params.cluster_rate, params.max_span)

    t_cluster = []
    t_ray = []
    for tc in cluster_times:
        rays = _poisson_arrivals(rng, params.ray_rate, params.max_span - tc)
        t_cluster.extend([tc] * rays.size)
        t_ray.extend(rays.tolist())
    t_cluster = np.array(t_cluster)
    t_ray = np.array(t_ray)
    n = t_ray.size

    sigma_db = float(np.hypot(params.lognormal_sigma_cluster, params.lognormal_sigma_ray))
    fading_db = sigma_db * rng.standard_normal(n)
    polarity = np.where(rng.random(n) < 0.5, -1.0, 1.0)

    mean_amp = np.exp(-0.5 * (t_cluster / params.cluster_decay + t_ray / params.ray_decay))
    gains = polarity * mean_amp * 10.0 ** (fading_db / 20.0)
    gains /= np.sqrt(np.dot(gains, gains))

    delays_ns = t_cluster + t_ray
    order = np.argsort(delays_ns, kind="stable")
    taps = tuple((float(gains[i]), float(delays_ns[i] * 1e-9)) for i in order)
    return ChannelRealization(taps)


def single_tap_channel() -> ChannelRealization:
    """Degenerate no-ISI, no-fading reference channel."""
    return ChannelRealization(((1.0, 0.0),))


def save_channel(ch: ChannelRealization, path) -> None:
    """Write taps as 'gain delay_ns' lines.  Decimal shifting (not float
    multiplication) converts seconds to ns so a save/load cycle is bit-exact."""
    lines = ["# monobit-uwb channel taps: gain delay_ns"]
    for gain, delay in ch.taps:
        delay_ns = Decimal(repr(delay)).scaleb(9).normalize()
        lines.append(f"{gain!r} {delay_ns}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_channel(path) -> ChannelRealization:
    """Parse a channel file written by :func:`save_channel`."""
    taps = []
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'gain delay_ns', got {raw!r}")
        try:
            gain = float(parts[0])
            delay = float(Decimal(parts[1]) * _NS)
        except (ValueError, ArithmeticError) as exc:
            raise ValueError(f"{path}:{lineno}: malformed number in {raw!r}") from exc
        taps.append((gain, delay))
    if not taps:
        raise ValueError(f"{path}: no taps")
    taps.sort(key=lambda t: t[1])
    return ChannelRealization(tuple(taps))


def filtered_pulse(pulse: PulseSpec, bandwidth: float, noise_level: float = 1.0,
                   ring_guard: float = 2e-9) -> SampledWaveform:
    """Transmit pulse through the ideal LPF on the fine grid.

    ``ring_guard`` zero-padding on each side gives the brick-wall ringing room
    before the support is truncated.
    """
    dt = 1.0 / (2.0 * bandwidth) / OVERSAMPLING
    half = int(np.ceil(pulse.truncation_span / dt))
    t = np.arange(-half, half + 1) * dt
    base = SampledWaveform(gaussian2_pulse(t, pulse), dt, -half * dt)
    guard = int(np.ceil(ring_guard / dt))
    return brickwall_lpf(base.padded(guard, guard), bandwidth, noise_level)


def make_p_ref(pulse: PulseSpec, ch: ChannelRealization, bandwidth: float,
               noise_level: float = 1.0, ring_guard: float = 2e-9) -> SampledWaveform:
    """Composite reference pulse: filtered transmit pulse through the multipath
    channel, i.e. sum of gain-weighted, delay-shifted copies on the fine grid.

    Tap delays are snapped to the nearest fine-grid point.
    """
    lp = filtered_pulse(pulse, bandwidth, noise_level, ring_guard)
    dt = lp.sample_period
    offsets = [round(d / dt) for _, d in ch.taps]
    out = np.zeros(len(lp) + max(offsets))
    for (gain, _), k in zip(ch.taps, offsets):
        out[k:k + len(lp)] += gain * lp.samples
    return SampledWaveform(out, dt, lp.start_time)


def align_support(p_ref: SampledWaveform, lead_trim: float = 0.005,
                  tail_trim: float = 0.001) -> SampledWaveform:
    """Trim low-energy leading/trailing samples so the support starts at the
    first significant arrival.

    Receiver timing: trellis step k scores the samples of its own symbol
    intervals, so the reference must not carry a dead leading region (LPF
    guard padding and pre-ringing), or every symbol's evidence would arrive
    whole intervals after the step that decides it.  ``lead_trim`` /
    ``tail_trim`` are the cumulative energy fractions dropped at each end.
    """
    if not 0.0 <= lead_trim < 0.5 or not 0.0 <= tail_trim < 0.5:
        raise ValueError("trim fractions must lie in [0, 0.5)")
    power = p_ref.samples * p_ref.samples
    cum = np.cumsum(power)
    total = cum[-1]
    if total <= 0.0:
        raise ValueError("cannot align a zero-energy waveform")
    lo = int(np.searchsorted(cum, lead_trim * total, side="right"))
    hi = int(np.searchsorted(cum, (1.0 - tail_trim) * total, side="left")) + 1
    dt = p_ref.sample_period
    return SampledWaveform(p_ref.samples[lo:hi], dt, p_ref.start_time + lo * dt)
