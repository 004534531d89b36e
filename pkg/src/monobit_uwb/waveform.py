"""Fine-grid waveform arithmetic: pulse synthesis, convolution, ideal filtering, sampling.

All continuous-time signals are represented on a uniform "fine" grid with an
explicit start time, so delayed copies never need interpolation.  The fine
grid runs ``OVERSAMPLING`` times faster than the receiver sample period
``T = 1/(2B)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Fine-grid points per receiver sample period T = 1/(2B).
OVERSAMPLING = 16

#: Relative tolerance when snapping times onto a sample grid.
_GRID_RTOL = 1e-6


@dataclass(frozen=True)
class PulseSpec:
    """Second-derivative Gaussian transmit pulse.

    ``tau`` sets the duration.  The pulse is treated as exactly zero beyond
    ``truncation_span`` (default 5*tau, where its magnitude is < 1e-30) so
    every derived waveform has finite support.
    """

    tau: float = 0.22e-9
    truncation_span: float = 0.0

    def __post_init__(self):
        if self.tau <= 0.0:
            raise ValueError("tau must be positive")
        if self.truncation_span == 0.0:
            object.__setattr__(self, "truncation_span", 5.0 * self.tau)
        if self.truncation_span < 4.0 * self.tau:
            raise ValueError("truncation_span must be at least 4*tau")


def gaussian2_pulse(t, spec: PulseSpec = PulseSpec()):
    """Evaluate (1 - 4*pi*(t/tau)^2) * exp(-2*pi*(t/tau)^2) at time(s) ``t`` seconds.

    Returns exactly 0.0 for |t| > spec.truncation_span.
    """
    t = np.asarray(t, dtype=float)
    u = t / spec.tau
    out = (1.0 - 4.0 * np.pi * u * u) * np.exp(-2.0 * np.pi * u * u)
    out = np.where(np.abs(t) > spec.truncation_span, 0.0, out)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class SampledWaveform:
    """Uniformly sampled real signal with explicit grid placement.

    Instances are immutable (the sample buffer is marked read-only) and can be
    shared freely across worker threads.
    """

    samples: np.ndarray
    sample_period: float
    start_time: float = 0.0

    def __post_init__(self):
        if self.sample_period <= 0.0:
            raise ValueError("sample_period must be positive")
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def end_time(self) -> float:
        return self.start_time + len(self) * self.sample_period

    def times(self) -> np.ndarray:
        return self.start_time + self.sample_period * np.arange(len(self))

    def energy(self) -> float:
        """Riemann approximation of the continuous L2 energy."""
        return float(np.dot(self.samples, self.samples) * self.sample_period)

    def padded(self, left: int, right: int) -> "SampledWaveform":
        """Zero-extend by ``left``/``right`` samples."""
        if left < 0 or right < 0:
            raise ValueError("padding must be non-negative")
        out = np.zeros(len(self) + left + right)
        out[left:left + len(self)] = self.samples
        return SampledWaveform(out, self.sample_period,
                               self.start_time - left * self.sample_period)

    def shifted(self, delay: float) -> "SampledWaveform":
        return SampledWaveform(self.samples, self.sample_period, self.start_time + delay)

    def scaled(self, gain: float) -> "SampledWaveform":
        return SampledWaveform(self.samples * gain, self.sample_period, self.start_time)

    def __add__(self, other: "SampledWaveform") -> "SampledWaveform":
        if not isinstance(other, SampledWaveform):
            return NotImplemented
        _require_matching_grids(self, other)
        dt = self.sample_period
        off = (other.start_time - self.start_time) / dt
        k = round(off)
        start = min(0, k)
        stop = max(len(self), k + len(other))
        out = np.zeros(stop - start)
        out[-start:-start + len(self)] += self.samples
        out[k - start:k - start + len(other)] += other.samples
        return SampledWaveform(out, dt, self.start_time + start * dt)


def _require_matching_grids(a: SampledWaveform, b: SampledWaveform) -> None:
    if abs(a.sample_period - b.sample_period) > _GRID_RTOL * a.sample_period:
        raise ValueError("sample periods do not match")
    off = (b.start_time - a.start_time) / a.sample_period
    if abs(off - round(off)) > _GRID_RTOL:
        raise ValueError("waveform grids are not aligned")


def convolve(a: SampledWaveform, b: SampledWaveform) -> SampledWaveform:
    """Discrete convolution scaled by the sample period (Riemann approximation
    of continuous convolution)."""
    if abs(a.sample_period - b.sample_period) > _GRID_RTOL * a.sample_period:
        raise ValueError("sample periods do not match")
    out = np.convolve(a.samples, b.samples) * a.sample_period
    return SampledWaveform(out, a.sample_period, a.start_time + b.start_time)


def brickwall_lpf(x: SampledWaveform, bandwidth: float,
                  noise_level: float = 1.0) -> SampledWaveform:
    """Ideal low-pass filter: gain 1/sqrt(noise_level*bandwidth) for |f| <= bandwidth,
    zero elsewhere.

    Realized as a DFT mask on the waveform's own grid, which makes repeated
    application with unit passband gain exactly idempotent.  Callers that need
    room for the filter ringing should zero-pad first (``SampledWaveform.padded``).
    """
    if bandwidth <= 0.0:
        raise ValueError("bandwidth must be positive")
    dt = x.sample_period
    if 1.0 / dt < 2.0 * bandwidth * (1.0 - _GRID_RTOL):
        raise ValueError("waveform grid too coarse for the requested bandwidth")
    gain = 1.0 / math.sqrt(noise_level * bandwidth)
    spectrum = np.fft.rfft(x.samples)
    freqs = np.fft.rfftfreq(len(x), dt)
    spectrum = np.where(freqs <= bandwidth * (1.0 + 1e-12), spectrum * gain, 0.0)
    out = np.fft.irfft(spectrum, n=len(x))
    return SampledWaveform(out, dt, x.start_time)


def resample(x: SampledWaveform, period: float, offset: float, count: int) -> np.ndarray:
    """Read x(offset + i*period) for i in [0, count); zero outside the support.

    ``period`` must be an integer multiple of the waveform grid step.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    dt = x.sample_period
    stride_f = period / dt
    stride = round(stride_f)
    if stride < 1 or abs(stride_f - stride) > _GRID_RTOL * stride:
        raise ValueError("period is not an integer multiple of the waveform grid")
    first = (offset - x.start_time) / dt
    i0 = round(first)
    idx = i0 + stride * np.arange(count)
    out = np.zeros(count)
    valid = (idx >= 0) & (idx < len(x))
    out[valid] = x.samples[idx[valid]]
    return out


def sampled_support(x: SampledWaveform, period: float) -> np.ndarray:
    """Sample the full support of ``x`` at ``period``, phase-locked to its first
    sample.  Both the transmitter and the decoder read the reference pulse
    through this helper so they agree sample-for-sample."""
    dt = x.sample_period
    stride_f = period / dt
    stride = round(stride_f)
    if stride < 1 or abs(stride_f - stride) > _GRID_RTOL * stride:
        raise ValueError("period is not an integer multiple of the waveform grid")
    return x.samples[::stride].copy()
