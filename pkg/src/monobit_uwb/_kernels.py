"""Compiled inner loops for the Monte Carlo decoders.

Everything here is numba-jitted with ``nogil`` so sweep workers can run in
threads.  The per-sample likelihood uses p(r|w) = Q(-r*w) = 1/2 + r*(1/2 - Q(w)),
floored at 1e-300 before the log so a flatly contradicted sample keeps the
arithmetic finite.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

PROB_FLOOR = 1e-300
_INV_SQRT2 = 0.7071067811865476
_LOG_HALF = math.log(0.5)


@njit(cache=True, nogil=True, inline="always")
def _log_p(r, w):
    p = 0.5 * math.erfc(-r * w * _INV_SQRT2)
    if p < PROB_FLOOR:
        p = PROB_FLOOR
    return math.log(p)


@njit(cache=True, nogil=True)
def joint_kernel(r_flat, rho, n, amplitude, next_state, amp0, amp1, n_steps):
    """Joint Viterbi + decision feedback over monobit samples.

    r_flat: flattened +-1 frame (2 * n_steps * n entries).
    rho: receiver-rate reference pulse over its full support.
    amp0/amp1: per (state, input) signed amplitudes of the two new code
    symbols.  Returns per-step winner tables for traceback plus the final
    state metrics.
    """
    n_states = next_state.shape[0]
    L = rho.size
    lt = L - n if L > n else 0
    lim = L if L < n else n

    metrics = np.full(n_states, -np.inf)
    metrics[0] = 0.0
    new_metrics = np.empty(n_states)
    pred = np.zeros((n_steps, n_states), dtype=np.int32)
    ibit = np.zeros((n_steps, n_states), dtype=np.uint8)
    tails = np.zeros((n_states, lt))
    new_tails = np.zeros((n_states, lt))

    for k in range(n_steps):
        base = 2 * k * n
        for t in range(n_states):
            new_metrics[t] = -np.inf
        if lt == 0:
            # No cross-symbol interference: the per-symbol metric depends only
            # on the code bit, so the four possible sums are built once.
            t0p = 0.0
            t0m = 0.0
            t1p = 0.0
            t1m = 0.0
            for i in range(lim):
                wp = amplitude * rho[i]
                r0 = r_flat[base + i]
                r1 = r_flat[base + n + i]
                t0p += _log_p(r0, wp)
                t0m += _log_p(r0, -wp)
                t1p += _log_p(r1, wp)
                t1m += _log_p(r1, -wp)
            rest = (n - lim) * _LOG_HALF
            t0p += rest
            t0m += rest
            t1p += rest
            t1m += rest
            for s in range(n_states):
                if metrics[s] == -np.inf:
                    continue
                for b in range(2):
                    bm0 = t0p if amp0[s, b] > 0.0 else t0m
                    bm1 = t1p if amp1[s, b] > 0.0 else t1m
                    cand = metrics[s] + (bm0 + bm1)
                    t = next_state[s, b]
                    if cand > new_metrics[t]:
                        new_metrics[t] = cand
                        pred[k, t] = s
                        ibit[k, t] = b
        else:
            for s in range(n_states):
                if metrics[s] == -np.inf:
                    continue
                for b in range(2):
                    a0 = amp0[s, b]
                    a1 = amp1[s, b]
                    bm0 = 0.0
                    for i in range(n):
                        w = tails[s, i] if i < lt else 0.0
                        if i < L:
                            w += a0 * rho[i]
                        bm0 += _log_p(r_flat[base + i], w)
                    bm1 = 0.0
                    for i in range(n):
                        j = n + i
                        w = tails[s, j] if j < lt else 0.0
                        if j < L:
                            w += a0 * rho[j]
                        if i < L:
                            w += a1 * rho[i]
                        bm1 += _log_p(r_flat[base + j], w)
                    cand = metrics[s] + (bm0 + bm1)
                    t = next_state[s, b]
                    if cand > new_metrics[t]:
                        new_metrics[t] = cand
                        pred[k, t] = s
                        ibit[k, t] = b
            # Rebuild the winners' interference tails, shifted one step.
            for t in range(n_states):
                if new_metrics[t] == -np.inf:
                    continue
                s = pred[k, t]
                b = ibit[k, t]
                a0 = amp0[s, b]
                a1 = amp1[s, b]
                for j in range(lt):
                    w = tails[s, j + 2 * n] if j + 2 * n < lt else 0.0
                    if j + 2 * n < L:
                        w += a0 * rho[j + 2 * n]
                    if j + n < L:
                        w += a1 * rho[j + n]
                    new_tails[t, j] = w
            tmp_t = tails
            tails = new_tails
            new_tails = tmp_t
        tmp_m = metrics
        metrics = new_metrics
        new_metrics = tmp_m
    return pred, ibit, metrics


@njit(cache=True, nogil=True)
def table_viterbi_kernel(tables, next_state, code_bits):
    """Viterbi over the code trellis with per-symbol, per-bit metric tables.

    tables[m, c] is the metric contribution of code bit value c in symbol
    interval m.
    """
    n_states = next_state.shape[0]
    n_steps = tables.shape[0] // 2
    metrics = np.full(n_states, -np.inf)
    metrics[0] = 0.0
    new_metrics = np.empty(n_states)
    pred = np.zeros((n_steps, n_states), dtype=np.int32)
    ibit = np.zeros((n_steps, n_states), dtype=np.uint8)
    for k in range(n_steps):
        for t in range(n_states):
            new_metrics[t] = -np.inf
        for s in range(n_states):
            if metrics[s] == -np.inf:
                continue
            for b in range(2):
                bm = tables[2 * k, code_bits[s, b, 0]] + tables[2 * k + 1, code_bits[s, b, 1]]
                cand = metrics[s] + bm
                t = next_state[s, b]
                if cand > new_metrics[t]:
                    new_metrics[t] = cand
                    pred[k, t] = s
                    ibit[k, t] = b
        tmp = metrics
        metrics = new_metrics
        new_metrics = tmp
    return pred, ibit, metrics


@njit(cache=True, nogil=True)
def cascade_stage1_kernel(r_flat, rho, n, amplitude, depth, delay, clamp):
    """Symbol-by-symbol monobit DFE over a 2^depth-hypothesis lattice.

    State bit p holds code symbol (m - 1 - p).  Interference from symbols
    older than the window is reconstructed per survivor: each hypothesis
    carries its own feedback waveform, updated with the bit it drops when its
    window slides.  Decisions are released by register-exchange traceback
    after ``delay`` further symbols; the soft value of a released bit is its
    surviving metric margin (the smallest add-compare-select gap that could
    have flipped it, clamped to +-clamp), signed by the released bit.
    """
    L = rho.size
    n_sym = r_flat.size // n
    n_states = 1 << depth
    mask = n_states - 1
    lt = L - n if L > n else 0
    dlen = delay + 1

    tails = np.zeros((n_states, lt))
    new_tails = np.zeros((n_states, lt))
    metrics = np.full(n_states, -np.inf)
    metrics[0] = 0.0
    new_metrics = np.empty(n_states)
    loser_metrics = np.empty(n_states)
    pred = np.zeros(n_states, dtype=np.int32)
    loser = np.zeros(n_states, dtype=np.int32)
    # register-exchange memories: entry d of state t is the survivor's bit for
    # symbol m - d and the margin with which it has survived so far
    path = np.zeros((n_states, dlen), dtype=np.uint8)
    new_path = np.zeros((n_states, dlen), dtype=np.uint8)
    margin = np.zeros((n_states, dlen))
    new_margin = np.zeros((n_states, dlen))
    lambdas = np.zeros(n_sym)
    hard = np.zeros(n_sym, dtype=np.uint8)

    for m in range(n_sym):
        base = m * n
        for t in range(n_states):
            new_metrics[t] = -np.inf
            loser_metrics[t] = -np.inf
        for s in range(n_states):
            if metrics[s] == -np.inf:
                continue
            for b in range(2):
                bm = 0.0
                for i in range(n):
                    w = tails[s, i] if i < lt else 0.0
                    if i < L:
                        w += amplitude * rho[i] if b == 1 else -amplitude * rho[i]
                    for p in range(depth):
                        if p > m - 1:
                            break
                        off = (p + 1) * n + i
                        if off < L:
                            w += amplitude * rho[off] if (s >> p) & 1 else -amplitude * rho[off]
                    bm += _log_p(r_flat[base + i], w)
                cand = metrics[s] + bm
                t = ((s << 1) | b) & mask
                if cand > new_metrics[t]:
                    loser_metrics[t] = new_metrics[t]
                    loser[t] = pred[t]
                    new_metrics[t] = cand
                    pred[t] = s
                elif cand > loser_metrics[t]:
                    loser_metrics[t] = cand
                    loser[t] = s
        # survivor bookkeeping: feedback tails, path bits, and the surviving
        # margins (both competitors of a state share its newest bit, so the
        # ACS gap bounds every older position where their paths disagree)
        for t in range(n_states):
            if new_metrics[t] == -np.inf:
                continue
            win = pred[t]
            d_bit = (win >> (depth - 1)) & 1
            for j in range(lt):
                w = tails[win, j + n] if j + n < lt else 0.0
                off = (depth + 1) * n + j
                if off < L and m >= depth:
                    w += amplitude * rho[off] if d_bit == 1 else -amplitude * rho[off]
                new_tails[t, j] = w
            new_path[t, 0] = t & 1
            new_margin[t, 0] = clamp
            has_loser = loser_metrics[t] != -np.inf
            gap = new_metrics[t] - loser_metrics[t] if has_loser else clamp
            if gap > clamp:
                gap = clamp
            lose = loser[t]
            for d in range(1, dlen):
                mg = margin[win, d - 1]
                if has_loser and path[win, d - 1] != path[lose, d - 1]:
                    if gap < mg:
                        mg = gap
                new_path[t, d] = path[win, d - 1]
                new_margin[t, d] = mg
        tmp_t = tails
        tails = new_tails
        new_tails = tmp_t
        tmp_p = path
        path = new_path
        new_path = tmp_p
        tmp_g = margin
        margin = new_margin
        new_margin = tmp_g
        tmp = metrics
        metrics = new_metrics
        new_metrics = tmp

        ksym = m - delay
        if ksym >= 0:
            best = 0
            bv = -np.inf
            for t in range(n_states):
                if metrics[t] > bv:
                    bv = metrics[t]
                    best = t
            lam = margin[best, delay]
            if path[best, delay] == 0:
                lam = -lam
            lambdas[ksym] = lam
            hard[ksym] = 1 if lam > 0.0 else 0

    # flush the last `delay` symbols from the best final survivor
    best = 0
    bv = -np.inf
    for t in range(n_states):
        if metrics[t] > bv:
            bv = metrics[t]
            best = t
    start = n_sym - delay if n_sym > delay else 0
    for ksym in range(start, n_sym):
        d = n_sym - 1 - ksym
        lam = margin[best, d]
        if path[best, d] == 0:
            lam = -lam
        lambdas[ksym] = lam
        hard[ksym] = 1 if lam > 0.0 else 0
    return lambdas, hard
