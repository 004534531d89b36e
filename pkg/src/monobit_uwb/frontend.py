"""Transmit-side synthesis, SNR scaling, and the 1-bit quantizer front end."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as _sig

from .waveform import SampledWaveform, sampled_support


@dataclass(frozen=True)
class MonobitFrame:
    """Matrix of +-1 quantizer outputs, one row per code symbol interval."""

    samples: np.ndarray          # (n_symbols, samples_per_symbol) int8
    sample_period: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.int8)
        if samples.ndim != 2:
            raise ValueError("frame must be a 2-D matrix")
        if not np.all(np.abs(samples) == 1):
            raise ValueError("frame entries must be +-1")
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def n_symbols(self) -> int:
        return self.samples.shape[0]

    @property
    def samples_per_symbol(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class LinkBudget:
    """Amplitude scale applied to the reference pulse for a target Eb/N0."""

    eb_n0_db: float
    amplitude: float

    def __post_init__(self):
        if self.amplitude <= 0.0:
            raise ValueError("amplitude must be positive")


def reference_samples(p_ref, sample_period: float) -> np.ndarray:
    """Receiver-rate samples of the reference pulse over its full support.

    Both the transmitter and all decoders read p_ref through this helper, so
    the reconstructed interference in the decoder matches the synthesized
    signal sample-for-sample (perfect CSI).  A plain array passes through
    unchanged (already-sampled reference).
    """
    if isinstance(p_ref, SampledWaveform):
        return sampled_support(p_ref, sample_period)
    return np.ascontiguousarray(p_ref, dtype=float)


def synthesize_noiseless(symbols, p_ref, amplitude: float,
                         sample_period: float, samples_per_symbol: int) -> np.ndarray:
    """Noiseless receive matrix w[m, i] = A * sum_k c_k * rho[(m - k)*N + i].

    The superposition spans the full channel memory; symbol k never reaches
    samples earlier than its own interval.
    """
    symbols = np.asarray(symbols, dtype=float)
    rho = reference_samples(p_ref, sample_period)
    n = int(samples_per_symbol)
    total = symbols.size * n
    train = np.zeros(total)
    train[::n] = symbols
    flat = _sig.convolve(train, rho)[:total]
    return (amplitude * flat).reshape(symbols.size, n)


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def add_noise(w: np.ndarray, seed) -> np.ndarray:
    """Add i.i.d. unit-variance Gaussian noise (the LPF output normalization
    makes receiver-rate noise samples independent with variance one)."""
    rng = _as_rng(seed)
    return w + rng.standard_normal(w.shape)


def quantize(w: np.ndarray, seed, sample_period: float = 1.0) -> MonobitFrame:
    """1-bit quantization of w plus unit Gaussian noise; an exact-zero argument
    maps to -1."""
    noisy = add_noise(np.asarray(w, dtype=float), seed)
    bits = np.where(noisy > 0.0, 1, -1).astype(np.int8)
    return MonobitFrame(bits, sample_period)


def scale_for_snr(p_ref, eb_n0_db: float, sample_period: float) -> LinkBudget:
    """Amplitude A with A^2 * sum_i rho_i^2 = 10^(eb_n0_db/10), summing over the
    full support of the sampled reference pulse."""
    rho = reference_samples(p_ref, sample_period)
    energy = float(np.dot(rho, rho))
    if energy <= 0.0:
        raise ValueError("reference pulse has zero sampled energy")
    return LinkBudget(eb_n0_db, float(np.sqrt(10.0 ** (eb_n0_db / 10.0) / energy)))
