"""Acceptance suite: one test per criterion, each printing a PASS line with the
measured numbers (pytest -v -s shows them; failures carry the same detail).

The two Monte Carlo criteria (Fig.7-style gaps, state-count trends) share one
desk-scale study object so channel realizations and expensive curves are
computed once per session.
"""
import math
from dataclasses import dataclass, field

import numpy as np
import pytest

from monobit_uwb import (ExperimentConfig, GeneratorSpec, OVERSAMPLING, PulseSpec,
                         SampledWaveform, align_support, branch_metric, brickwall_lpf,
                         build_trellis, candidate_window, encode, joint_viterbi_dfe,
                         make_p_ref, modulate, monobit_soft_viterbi_noisi, q_function,
                         quantize, reference_samples, run_sweep, single_tap_channel,
                         synthesize_noiseless, traceback, trace_joint_decode, write_csv)

LEVEL = 1e-3
STUDY_SEED = 20240809


# ---------------------------------------------------------------------------
# Criterion 1: worked-example fidelity (g=[5,7], first-step waveforms and the
# s0 -> s2 -> s1 -> s0 traceback).  Exact equality, < 1 s.
# ---------------------------------------------------------------------------

def test_c1_worked_example_fidelity():
    g = GeneratorSpec((0o5, 0o7))
    trellis = build_trellis(g, 0)
    t = 1e-10
    n = 10
    p_ref = align_support(make_p_ref(PulseSpec(0.22e-9), single_tap_channel(), 5e9))
    rho = reference_samples(p_ref, t)

    # step-1 candidates from s0: input 0 -> s0 with -p_ref(t) - p_ref(t - T_s),
    # input 1 -> s2 with +p_ref(t) + p_ref(t - T_s)
    for b, state, sign in ((0, 0, -1.0), (1, 2, +1.0)):
        assert int(trellis.next_state[0, b]) == state
        amp0 = 2.0 * trellis.code_bits[0, b, 0] - 1.0
        amp1 = 2.0 * trellis.code_bits[0, b, 1] - 1.0
        got = candidate_window(np.zeros(0), rho, n, amp0, amp1)
        direct = np.zeros(2 * n)
        lim = min(2 * n, rho.size)
        direct[:lim] = rho[:lim]          # p_ref(t)
        direct[n:] += rho[:n]             # p_ref(t - T_s)
        direct *= sign
        assert np.array_equal(got, direct)

    # forced survivor path s0 -> s2 -> s1 -> s0 tracebacks to {1, 0, 0}
    pred = np.zeros((3, 4), dtype=np.int32)
    bits = np.zeros((3, 4), dtype=np.uint8)
    pred[0, 2], bits[0, 2] = 0, 1
    pred[1, 1], bits[1, 1] = 2, 0
    pred[2, 0], bits[2, 0] = 1, 0
    decoded = traceback(pred, bits, 0)
    assert decoded.tolist() == [1, 0, 0]

    # the same path wins an actual noiseless-limit decode of the codeword
    info = np.array([1, 0, 0], dtype=np.uint8)
    rho_u = rho / math.sqrt(float(np.dot(rho, rho)))
    w = synthesize_noiseless(modulate(encode(info, g)), rho_u, 25.0, t, n)
    frame = quantize(w, 1, t)
    trace = trace_joint_decode(frame, trellis, rho_u, 25.0)
    assert trace.decoded.tolist() == [1, 0, 0]
    print("[C1] worked-example fidelity: PASS (exact waveforms, traceback {1,0,0})")


# ---------------------------------------------------------------------------
# Criterion 2: branch-metric oracle, 1e4 random vectors vs a high-precision
# direct evaluation of the per-sample probabilities.  1e-12 relative, < 5 s.
# ---------------------------------------------------------------------------

def test_c2_branch_metric_oracle():
    import mpmath
    mpmath.mp.dps = 30

    def oracle(r_vec, w_vec):
        total = mpmath.mpf(0)
        for r, w in zip(r_vec, w_vec):
            eps = mpmath.erfc(mpmath.mpf(w) / mpmath.sqrt(2)) / 2   # Q(w)
            p = (1 - eps) if r > 0 else eps
            total += mpmath.log(p)
        return float(total)

    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(10_000):
        m = int(rng.integers(1, 9))
        w = rng.uniform(-4.0, 4.0, size=m)
        r = np.where(rng.random(m) < 0.5, -1.0, 1.0)
        got = branch_metric(r, w)
        want = oracle(r, w)
        rel = abs(got - want) / abs(want)
        worst = max(worst, rel)
    print(f"[C2] branch-metric oracle: PASS (worst relative error {worst:.2e})")
    assert worst < 1e-12


# ---------------------------------------------------------------------------
# Criterion 3: small-instance ML equivalence.  100 frames, U=8, two-symbol
# memory, q=1 covers the interference: Viterbi must equal exhaustive ML on
# every frame.  < 30 s.
# ---------------------------------------------------------------------------

def test_c3_small_instance_ml_equivalence():
    g = GeneratorSpec((0o5, 0o7))
    trellis = build_trellis(g, 1)
    n = 4
    u = 8
    amplitude = 1.0
    rho = np.array([1.0, 0.55, -0.35, 0.25, 0.4, -0.2, 0.15, -0.1,
                    0.2, 0.1, -0.08, 0.04])
    assert rho.size <= 3 * n   # interference reaches two past symbols

    # 256-codeword table built once: w matrices for every info word
    words = np.array([[(word >> (u - 1 - i)) & 1 for i in range(u)]
                      for word in range(1 << u)], dtype=np.uint8)
    w_all = np.stack([
        synthesize_noiseless(modulate(encode(bits, g)), rho, amplitude, 1.0, n).reshape(-1)
        for bits in words])

    rng = np.random.default_rng(77)
    for trial in range(100):
        info = words[int(rng.integers(1 << u))]
        w = synthesize_noiseless(modulate(encode(info, g)), rho, amplitude, 1.0, n)
        frame = quantize(w, int(rng.integers(1 << 30)), 1.0)
        decoded = joint_viterbi_dfe(frame, trellis, rho, amplitude)

        r = frame.samples.reshape(-1).astype(float)
        p = 0.5 + r[None, :] * (0.5 - q_function(w_all))
        scores = np.log(np.maximum(p, 1e-300)).sum(axis=1)
        best = int(np.argmax(scores))
        assert np.array_equal(decoded, words[best]), f"trial {trial}"
    print("[C3] small-instance ML equivalence: PASS (100/100 frames)")


# ---------------------------------------------------------------------------
# Criterion 4: no-ISI consistency.  Joint decoder and the no-ISI monobit
# Viterbi are bit-identical on a single-tap channel over 1e5 bits.
# ---------------------------------------------------------------------------

def test_c4_no_isi_consistency():
    g = GeneratorSpec((0o5, 0o7))
    trellis = build_trellis(g, 0)
    t = 1e-10
    p_ref = align_support(make_p_ref(PulseSpec(0.22e-9), single_tap_channel(), 5e9))
    rho = reference_samples(p_ref, t)
    n = rho.size            # symbol interval covers the whole reference pulse
    amplitude = (10.0 ** (5.0 / 20.0)) / math.sqrt(float(np.dot(rho, rho)))

    u = 5000
    total = 0
    rng = np.random.default_rng(99)
    for _ in range(20):
        info = rng.integers(0, 2, size=u).astype(np.uint8)
        w = synthesize_noiseless(modulate(encode(info, g)), rho, amplitude, t, n)
        frame = quantize(w, rng, t)
        a = joint_viterbi_dfe(frame, trellis, rho, amplitude)
        b = monobit_soft_viterbi_noisi(frame, trellis, rho, amplitude)
        assert np.array_equal(a, b)
        total += u
    assert total == 100_000
    print(f"[C4] no-ISI consistency: PASS (joint == mb-noisi on {total} bits)")


# ---------------------------------------------------------------------------
# Criteria 5 and 6: desk-scale CM1 Monte Carlo study.
# ---------------------------------------------------------------------------

@dataclass
class Cm1Study:
    """Cached desk-scale BER curves over a fixed set of 10 CM1 realizations."""

    master_seed: int = STUDY_SEED
    probe_cache: dict = field(default_factory=dict)
    full_cache: dict = field(default_factory=dict)

    PROBE_FRAMES = 6        # 10 realizations x 6 frames x 500 bits = 30k bits
    FULL_FRAMES = 50        # up to 250k bits, early stop at 200 errors

    def _config(self, mode, q, snrs, frames, target):
        return ExperimentConfig(
            mode=mode, expand_q=q, snr_db=tuple(snrs), realizations=10,
            frames_per_realization=frames, bits_per_frame=500, channel_kind="sv",
            master_seed=self.master_seed, target_errors=target,
            symbol_period=100e-9 if mode == "fr-noisi" else 1e-9)

    def _measure(self, cache, mode, q, snrs, frames, target):
        missing = sorted(s for s in snrs if (mode, q, s) not in cache)
        if missing:
            for p in run_sweep(self._config(mode, q, missing, frames, target)):
                cache[(mode, q, p.eb_n0_db)] = p
        return {s: cache[(mode, q, s)] for s in snrs}

    def probe(self, mode, q, snrs):
        return self._measure(self.probe_cache, mode, q, snrs, self.PROBE_FRAMES, 0)

    def full(self, mode, q, snrs):
        return self._measure(self.full_cache, mode, q, snrs, self.FULL_FRAMES, 200)

    def probe_bracket(self, mode, q, grid):
        """Adjacent probe SNRs straddling BER = LEVEL, extending the grid as
        needed."""
        snrs = sorted(grid)
        for _ in range(12):
            pts = self.probe(mode, q, snrs)
            bers = [pts[s].ber for s in snrs]
            above = [s for s, b in zip(snrs, bers) if b > LEVEL]
            below = [s for s, b in zip(snrs, bers) if b <= LEVEL and
                     (not above or s > above[-1])]
            if above and below:
                return above[-1], below[0]
            if not above:
                snrs = [min(snrs) - 2.0] + snrs
            else:
                snrs = snrs + [max(snrs) + 2.0]
        raise AssertionError(f"could not bracket BER={LEVEL} for {mode} q={q}")

    def crossing(self, mode, q, grid):
        """Eb/N0 at which the full-profile curve crosses BER = LEVEL."""
        lo, hi = self.probe_bracket(mode, q, grid)
        snrs = sorted({lo, (lo + hi) / 2.0, hi})
        for _ in range(8):
            pts = self.full(mode, q, snrs)
            xs = sorted(snrs)
            bers = {s: max(pts[s].ber, 0.5 / max(pts[s].bits_total, 1)) for s in xs}
            pair = None
            for a, b in zip(xs, xs[1:]):
                if bers[a] > LEVEL >= bers[b]:
                    pair = (a, b)
            if pair:
                a, b = pair
                f = (math.log10(bers[a]) - math.log10(LEVEL)) / \
                    (math.log10(bers[a]) - math.log10(bers[b]))
                return a + f * (b - a)
            if all(bers[s] > LEVEL for s in xs):
                snrs = xs + [xs[-1] + 1.0]
            else:
                snrs = [xs[0] - 1.0] + xs
        raise AssertionError(f"could not refine BER={LEVEL} crossing for {mode} q={q}")


@pytest.fixture(scope="session")
def cm1_study():
    return Cm1Study()


@pytest.mark.slow
def test_c5_fig7_gap_reproduction(cm1_study):
    joint = cm1_study.crossing("joint", 1, [5.0, 7.0])
    cascade = cm1_study.crossing("cascade", 0, [6.0, 8.0])
    fr = cm1_study.crossing("fr-noisi", 0, [2.0, 4.0])
    cascade_gap = cascade - joint
    fr_gap = joint - fr
    print(f"[C5] Fig.7 gaps at BER 1e-3: joint(128S)={joint:.2f} dB, "
          f"cascade={cascade:.2f} dB, fr-noisi={fr:.2f} dB -> "
          f"joint-vs-cascade gap {cascade_gap:.2f} dB (want 1 +- 0.5), "
          f"joint-vs-FR gap {fr_gap:.2f} dB (want 3 +- 1)")
    assert 0.5 <= cascade_gap <= 1.5
    assert 2.0 <= fr_gap <= 4.0


@pytest.mark.slow
def test_c6_fig8_state_count_trends(cm1_study):
    grid = [5.0, 6.0, 7.0, 8.0]
    curves = {q: cm1_study.probe("joint", q, grid) for q in (0, 1, 2)}
    for snr in grid:
        for q in (0, 1):
            a, b = curves[q][snr], curves[q + 1][snr]
            pa, pb = a.ber, b.ber
            sigma = math.sqrt(pa * (1 - pa) / a.bits_total +
                              pb * (1 - pb) / b.bits_total)
            states_a, states_b = 64 << q, 128 << q
            print(f"[C6] {snr:.0f} dB: BER({states_a}S)={pa:.2e} "
                  f"BER({states_b}S)={pb:.2e} (3 sigma={3 * sigma:.2e})")
            assert pb <= pa + 3.0 * sigma
    c128 = cm1_study.crossing("joint", 1, [5.0, 7.0])
    c256 = cm1_study.crossing("joint", 2, [5.0, 7.0])
    improvement = c128 - c256
    print(f"[C6] Fig.8 trends: 128S crossing {c128:.2f} dB, 256S crossing "
          f"{c256:.2f} dB -> improvement {improvement:.2f} dB (want < 0.5)")
    assert improvement < 0.5


# ---------------------------------------------------------------------------
# Criterion 7: statistical front-end checks.  < 1 min.
# ---------------------------------------------------------------------------

def test_c7_statistical_front_end():
    # quantizer law at w in {-2, -1, 0, 1, 2}, 1e6 draws each, 3 sigma
    draws = 1_000_000
    for i, w0 in enumerate((-2.0, -1.0, 0.0, 1.0, 2.0)):
        frame = quantize(np.full((1000, draws // 1000), w0), 1000 + i, 1.0)
        p_hat = float(np.mean(frame.samples == 1))
        p = 1.0 - q_function(w0)
        sigma = math.sqrt(p * (1.0 - p) / draws)
        print(f"[C7] P(r=+1 | w={w0:+.0f}) = {p_hat:.6f} vs {p:.6f} "
              f"(|diff|={abs(p_hat - p):.2e}, 3 sigma={3 * sigma:.2e})")
        assert abs(p_hat - p) < 3.0 * sigma

    # filtered-noise variance normalization within 1%
    b = 5e9
    dt = 1.0 / (2.0 * b) / OVERSAMPLING
    rng = np.random.default_rng(424242)
    noise = SampledWaveform(rng.standard_normal(1 << 22), dt)
    filtered = brickwall_lpf(noise, b, noise_level=2.0 * dt)
    var = float(np.var(filtered.samples[::OVERSAMPLING]))
    print(f"[C7] filtered-noise variance: {var:.4f} (want 1 +- 0.01)")
    assert abs(var - 1.0) < 0.01


# ---------------------------------------------------------------------------
# Criterion 8: determinism.  Re-running a sweep gives byte-identical CSV.
# ---------------------------------------------------------------------------

def test_c8_sweep_determinism(tmp_path):
    config = ExperimentConfig(
        mode="joint", expand_q=1, snr_db=(5.0, 7.0), realizations=2,
        frames_per_realization=2, bits_per_frame=200, channel_kind="sv",
        master_seed=31337, target_errors=0)
    blobs = []
    for name in ("a.csv", "b.csv"):
        pts = run_sweep(config)
        path = tmp_path / name
        write_csv(pts, path)
        blobs.append(path.read_bytes())
    assert blobs[0] == blobs[1]
    threaded = run_sweep(ExperimentConfig(
        mode="joint", expand_q=1, snr_db=(5.0, 7.0), realizations=2,
        frames_per_realization=2, bits_per_frame=200, channel_kind="sv",
        master_seed=31337, target_errors=0, threads=4))
    path = tmp_path / "c.csv"
    write_csv(threaded, path)
    assert path.read_bytes() == blobs[0]
    print("[C8] sweep determinism: PASS (byte-identical CSV across reruns and "
          "thread counts)")
