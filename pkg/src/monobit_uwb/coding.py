"""Rate-1/2 convolutional encoding, trellis construction, and state expansion."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GeneratorSpec:
    """Two octal generator polynomials, most-significant bit = current input."""

    polys: tuple[int, int] = (0o171, 0o133)

    def __post_init__(self):
        if len(self.polys) != 2:
            raise ValueError("rate is fixed at 1/2: exactly two polynomials")
        if any(p <= 0 for p in self.polys):
            raise ValueError("generator polynomials must be positive")
        object.__setattr__(self, "polys", (int(self.polys[0]), int(self.polys[1])))

    @property
    def memory(self) -> int:
        """Number of shift registers (highest set bit position)."""
        return max(p.bit_length() for p in self.polys) - 1

    def tap_array(self, which: int) -> np.ndarray:
        """0/1 taps of one polynomial, current-input coefficient first."""
        mu = self.memory
        return np.array([(self.polys[which] >> (mu - i)) & 1 for i in range(mu + 1)],
                        dtype=np.uint8)


def encode(info_bits, g: GeneratorSpec) -> np.ndarray:
    """Feedforward convolutional encoding from the all-zero state, unterminated.

    Output length is exactly 2x the input length; even positions come from
    polys[0], odd positions from polys[1].
    """
    bits = np.asarray(info_bits, dtype=np.uint8)
    u = bits.size
    out = np.empty(2 * u, dtype=np.uint8)
    for j in range(2):
        stream = np.convolve(bits.astype(np.int64), g.tap_array(j).astype(np.int64))
        out[j::2] = (stream[:u] & 1).astype(np.uint8)
    return out


def modulate(code_bits) -> np.ndarray:
    """Binary PAM mapping: bit 1 -> +1, bit 0 -> -1."""
    bits = np.asarray(code_bits, dtype=np.int8)
    return (2 * bits - 1).astype(np.int8)


@dataclass(frozen=True)
class Trellis:
    """Finite-state machine of the encoder, optionally expanded with extra
    input-bit history for per-state decision feedback.

    State index layout: ``(encoder_state << expansion_bits) | history`` where
    ``encoder_state`` holds the last ``memory`` input bits (most recent at the
    MSB) and ``history`` the ``expansion_bits`` input bits older than the
    encoder window.  Code bits depend only on the encoder component.
    """

    generator: GeneratorSpec
    expansion_bits: int
    next_state: np.ndarray = field(repr=False)   # (S, 2) int32
    code_bits: np.ndarray = field(repr=False)    # (S, 2, 2) uint8

    def __post_init__(self):
        for name in ("next_state", "code_bits"):
            arr = getattr(self, name)
            arr.flags.writeable = False

    @property
    def n_states(self) -> int:
        return self.next_state.shape[0]

    def encoder_state(self, state: int) -> int:
        """Project an expanded state onto its encoder component."""
        return state >> self.expansion_bits

    def walk(self, info_bits, start_state: int = 0) -> np.ndarray:
        """Code bits emitted along the path driven by ``info_bits``."""
        out = np.empty(2 * len(info_bits), dtype=np.uint8)
        s = start_state
        for k, b in enumerate(np.asarray(info_bits, dtype=np.uint8)):
            out[2 * k:2 * k + 2] = self.code_bits[s, b]
            s = int(self.next_state[s, b])
        return out


def build_trellis(g: GeneratorSpec, expansion_bits: int = 0) -> Trellis:
    """Build the 2^(memory + expansion_bits)-state trellis for ``g``.

    With ``expansion_bits = 0`` this is the plain encoder trellis; each extra
    bit appends one more pre-window input bit to the state (DDFSE-style), so
    the code-sequence set is unchanged while survivors resolve more
    interference history.
    """
    if expansion_bits < 0:
        raise ValueError("expansion_bits must be non-negative")
    mu = g.memory
    q = expansion_bits
    n_states = 1 << (mu + q)
    hist_mask = (1 << q) - 1
    next_state = np.empty((n_states, 2), dtype=np.int32)
    code_bits = np.empty((n_states, 2, 2), dtype=np.uint8)
    for si in range(n_states):
        s = si >> q
        h = si & hist_mask
        for b in (0, 1):
            sr = (b << mu) | s
            c0 = (sr & g.polys[0]).bit_count() & 1
            c1 = (sr & g.polys[1]).bit_count() & 1
            s2 = sr >> 1
            if q:
                h2 = ((s & 1) << (q - 1)) | (h >> 1)
            else:
                h2 = 0
            next_state[si, b] = (s2 << q) | h2
            code_bits[si, b, 0] = c0
            code_bits[si, b, 1] = c1
    return Trellis(g, q, next_state, code_bits)
