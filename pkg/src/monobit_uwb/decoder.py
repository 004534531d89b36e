"""Joint Viterbi decoding + decision-feedback equalization over monobit samples,
plus the comparison baselines (cascade DFE->Viterbi and the no-ISI decoders).

The hot paths run through the compiled kernels in ``_kernels``; a pure-Python
replay (`trace_joint_decode`) mirrors the joint algorithm step by step for
debugging, worked-example checks, and cross-validation of the kernel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as _special

from . import _kernels
from .coding import Trellis
from .frontend import MonobitFrame, reference_samples
from .waveform import SampledWaveform

#: Probabilities are floored here before taking logs (branch metrics stay finite).
PROB_FLOOR = 1e-300

_SQRT2 = math.sqrt(2.0)


def q_function(x):
    """Upper-tail standard normal probability, via the complementary error
    function (absolute error well below 1e-12 over |x| <= 8)."""
    out = 0.5 * _special.erfc(np.asarray(x, dtype=float) / _SQRT2)
    if out.ndim == 0:
        return float(out)
    return out


def branch_metric(r, w) -> float:
    """Per-step log likelihood sum_i log(1/2 + r_i*(1/2 - Q(w_i))).

    Each term is log Q(-r*w), the same quantity; evaluating through
    Q(|r*w|) and log1p keeps full relative precision on both branches and
    makes the (r, w) -> (-r, -w) symmetry exact in floating point.
    """
    r = np.asarray(r, dtype=float)
    w = np.asarray(w, dtype=float)
    if r.shape != w.shape:
        raise ValueError("r and w must have equal length")
    y = r * w
    q = 0.5 * _special.erfc(np.abs(y) / _SQRT2)
    terms = np.where(y > 0, np.log1p(-q), np.log(np.maximum(q, PROB_FLOOR)))
    return float(np.sum(terms))


def _as_rho(p_ref, sample_period: float) -> np.ndarray:
    return reference_samples(p_ref, sample_period)


def _amp_tables(trellis: Trellis, amplitude: float) -> tuple[np.ndarray, np.ndarray]:
    signs = 2.0 * trellis.code_bits.astype(np.float64) - 1.0
    return (amplitude * signs[:, :, 0]).copy(), (amplitude * signs[:, :, 1]).copy()


def traceback(pred: np.ndarray, bits: np.ndarray, end_state: int) -> np.ndarray:
    """Walk the survivor pointers backward from ``end_state`` and return the
    decoded information bits."""
    n_steps = pred.shape[0]
    out = np.empty(n_steps, dtype=np.uint8)
    s = int(end_state)
    for k in range(n_steps - 1, -1, -1):
        out[k] = bits[k, s]
        s = int(pred[k, s])
    return out


def _frame_steps(frame: MonobitFrame) -> int:
    if frame.n_symbols % 2 != 0:
        raise ValueError("rate-1/2 frames must contain an even number of code symbols")
    return frame.n_symbols // 2


def joint_viterbi_dfe(frame: MonobitFrame, trellis: Trellis, p_ref,
                      amplitude: float) -> np.ndarray:
    """Decode one frame with the joint Viterbi + DFE algorithm.

    Per trellis step the two new code symbols' contributions are laid on top
    of the survivor's stored interference tail, scored against the monobit
    samples with the Q-function metric, and the best predecessor per arrived
    state is kept together with its updated tail.  After the last step the
    best end state is traced back.

    ``p_ref`` may be a fine-grid waveform or a precomputed receiver-rate
    reference vector.
    """
    n_steps = _frame_steps(frame)
    rho = _as_rho(p_ref, frame.sample_period)
    amp0, amp1 = _amp_tables(trellis, amplitude)
    pred, ibit, final = _kernels.joint_kernel(
        frame.samples.reshape(-1), rho, frame.samples_per_symbol,
        float(amplitude), trellis.next_state, amp0, amp1, n_steps)
    return traceback(pred, ibit, int(np.argmax(final)))


def monobit_soft_viterbi_noisi(frame: MonobitFrame, trellis: Trellis, p_ref,
                               amplitude: float) -> np.ndarray:
    """Soft-decision Viterbi over monobit samples ignoring interference: the
    hypothesized samples depend only on the current code bit.  On a channel
    whose reference pulse fits inside one symbol this coincides exactly with
    the joint decoder."""
    rho = _as_rho(p_ref, frame.sample_period)
    return joint_viterbi_dfe(frame, trellis, rho[:frame.samples_per_symbol], amplitude)


def _table_decode(tables: np.ndarray, trellis: Trellis) -> np.ndarray:
    pred, ibit, final = _kernels.table_viterbi_kernel(
        tables, trellis.next_state, trellis.code_bits)
    return traceback(pred, ibit, int(np.argmax(final)))


def full_resolution_soft_viterbi(w_plus_noise: np.ndarray, trellis: Trellis, p_ref,
                                 amplitude: float, sample_period: float) -> np.ndarray:
    """Full-resolution baseline for the no-ISI configuration: correlate each
    symbol interval against the scaled reference pulse and run soft-decision
    Viterbi on the per-symbol statistics."""
    y_in = np.asarray(w_plus_noise, dtype=float)
    if y_in.ndim != 2 or y_in.shape[0] % 2 != 0:
        raise ValueError("expected a (2U, N) matrix of received samples")
    n = y_in.shape[1]
    rho = _as_rho(p_ref, sample_period)
    template = np.zeros(n)
    m = min(n, rho.size)
    template[:m] = amplitude * rho[:m]
    y = y_in @ template
    tables = np.stack([-y, y], axis=1)
    return _table_decode(tables, trellis)


def cascade_soft_demod(frame: MonobitFrame, p_ref, amplitude: float,
                       depth: int = 6, decision_delay: int = 24,
                       soft_clamp: float = 1e3) -> tuple[np.ndarray, np.ndarray]:
    """Stage 1 of the cascade baseline: sequence-detection DFE over the last
    ``depth`` code bits (2^depth hypotheses), with per-survivor feedback for
    interference older than the window.  Bits are released by traceback after
    ``decision_delay`` further symbols; each soft value is the released bit's
    surviving metric margin, signed by the bit.  Returns (soft, hard)."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if decision_delay < depth:
        raise ValueError("decision_delay must be at least the lattice depth")
    rho = _as_rho(p_ref, frame.sample_period)
    lambdas, hard = _kernels.cascade_stage1_kernel(
        frame.samples.reshape(-1), rho, frame.samples_per_symbol,
        float(amplitude), depth, decision_delay, float(soft_clamp))
    return lambdas, hard


def cascade_dfe_viterbi(frame: MonobitFrame, trellis: Trellis, p_ref,
                        amplitude: float, depth: int = 6,
                        decision_delay: int = 24, soft_clamp: float = 1e3,
                        scalar_soft: bool = False) -> np.ndarray:
    """Cascade baseline: DFE demodulation paired with a standard (unexpanded)
    Viterbi decoder.

    By default the 64-state decoder scores the monobit samples directly while
    the decision feedback rides on each survivor, which reproduces the roughly
    1 dB deficit of the cascade against the state-expanded joint decoder.
    With ``scalar_soft=True`` the DFE instead compresses every code symbol to
    one soft value (:func:`cascade_soft_demod`) and the Viterbi decodes that
    sequence; the compression discards the burst structure of feedback errors
    and costs several further dB under long channel memory.
    """
    _frame_steps(frame)
    if scalar_soft:
        lambdas, _ = cascade_soft_demod(frame, p_ref, amplitude, depth,
                                        decision_delay, soft_clamp)
        tables = np.stack([-lambdas, lambdas], axis=1)
        return _table_decode(tables, trellis)
    return joint_viterbi_dfe(frame, trellis, p_ref, amplitude)


# ---------------------------------------------------------------------------
# Reference replay of the joint algorithm (debug / worked-example support).
# ---------------------------------------------------------------------------

def candidate_window(tail, rho, n: int, amp0: float, amp1: float) -> np.ndarray:
    """Hypothesized receive samples for one trellis step: the survivor's
    interference tail plus the two candidate code symbols' contributions."""
    tail = np.asarray(tail, dtype=float)
    rho = np.asarray(rho, dtype=float)
    w = np.zeros(2 * n)
    m = min(tail.size, 2 * n)
    w[:m] += tail[:m]
    lim = min(n, rho.size)
    w[:lim] += amp0 * rho[:lim]
    if rho.size > n:
        hi = min(2 * n, rho.size)
        w[n:hi] += amp0 * rho[n:hi]
    w[n:n + lim] += amp1 * rho[:lim]
    return w


def advance_tail(tail, rho, n: int, amp0: float, amp1: float) -> np.ndarray:
    """Survivor tail for the next step: shift by one step (2n samples) and add
    the freshly decided symbols' future interference."""
    tail = np.asarray(tail, dtype=float)
    rho = np.asarray(rho, dtype=float)
    lt = tail.size
    out = np.zeros(lt)
    src = tail[2 * n:]
    out[:src.size] += src
    seg = rho[2 * n:2 * n + lt]
    out[:seg.size] += amp0 * seg
    seg = rho[n:n + lt]
    out[:seg.size] += amp1 * seg
    return out


def _log_p_scalar(r: float, w: float) -> float:
    p = 0.5 * math.erfc(-r * w / _SQRT2)
    if p < PROB_FLOOR:
        p = PROB_FLOOR
    return math.log(p)


@dataclass
class JointDecodeTrace:
    """Step-by-step record of a joint decode (small frames only)."""

    decoded: np.ndarray
    metrics: np.ndarray            # (n_steps + 1, n_states) accumulated metrics
    pred: np.ndarray               # (n_steps, n_states)
    input_bits: np.ndarray         # (n_steps, n_states)
    end_state: int
    tails: list = field(default_factory=list)   # per-step (n_states, lt) copies

    def survivor_code_bits(self, trellis: Trellis, step: int, state: int) -> np.ndarray:
        """Code bits along the survivor path reaching ``state`` after ``step``
        steps (1-based step count)."""
        bits = []
        s = state
        for k in range(step - 1, -1, -1):
            b = int(self.input_bits[k, s])
            s = int(self.pred[k, s])
            bits.append(b)
        bits.reverse()
        s2 = s
        out = np.empty(2 * len(bits), dtype=np.uint8)
        for k, b in enumerate(bits):
            out[2 * k:2 * k + 2] = trellis.code_bits[s2, b]
            s2 = int(trellis.next_state[s2, b])
        return out


def trace_joint_decode(frame: MonobitFrame, trellis: Trellis, p_ref,
                       amplitude: float, initial_metrics=None,
                       record_tails: bool = False) -> JointDecodeTrace:
    """Pure-Python replay of :func:`joint_viterbi_dfe`.

    ``initial_metrics`` overrides the canonical start (state 0 at metric 0,
    everything else at -inf); the paper-style start (a large positive number
    at state 0, zeros elsewhere) decodes identically.
    """
    n_steps = _frame_steps(frame)
    n = frame.samples_per_symbol
    rho = _as_rho(p_ref, frame.sample_period)
    amp0, amp1 = _amp_tables(trellis, amplitude)
    n_states = trellis.n_states
    lt = max(rho.size - n, 0)

    if initial_metrics is None:
        metrics = np.full(n_states, -np.inf)
        metrics[0] = 0.0
    else:
        metrics = np.asarray(initial_metrics, dtype=float).copy()
        if metrics.shape != (n_states,):
            raise ValueError("initial_metrics must have one entry per state")

    history = np.empty((n_steps + 1, n_states))
    history[0] = metrics
    pred = np.zeros((n_steps, n_states), dtype=np.int32)
    ibit = np.zeros((n_steps, n_states), dtype=np.uint8)
    tails = np.zeros((n_states, lt))
    tail_log: list = []
    r_flat = frame.samples.reshape(-1).astype(float)

    for k in range(n_steps):
        r_step = r_flat[2 * k * n:2 * (k + 1) * n]
        new_metrics = np.full(n_states, -np.inf)
        new_tails = np.zeros((n_states, lt))
        for s in range(n_states):
            if metrics[s] == -np.inf:
                continue
            for b in (0, 1):
                w = candidate_window(tails[s], rho, n, amp0[s, b], amp1[s, b])
                bm0 = 0.0
                for i in range(n):
                    bm0 += _log_p_scalar(r_step[i], w[i])
                bm1 = 0.0
                for i in range(n, 2 * n):
                    bm1 += _log_p_scalar(r_step[i], w[i])
                cand = metrics[s] + (bm0 + bm1)
                t = int(trellis.next_state[s, b])
                if cand > new_metrics[t]:
                    new_metrics[t] = cand
                    pred[k, t] = s
                    ibit[k, t] = b
        for t in range(n_states):
            if new_metrics[t] == -np.inf:
                continue
            s = int(pred[k, t])
            b = int(ibit[k, t])
            new_tails[t] = advance_tail(tails[s], rho, n, amp0[s, b], amp1[s, b])
        metrics = new_metrics
        tails = new_tails
        history[k + 1] = metrics
        if record_tails:
            tail_log.append(tails.copy())

    end_state = int(np.argmax(metrics))
    decoded = traceback(pred, ibit, end_state)
    return JointDecodeTrace(decoded, history, pred, ibit, end_state, tail_log)
