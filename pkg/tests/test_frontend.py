import math

import numpy as np
import pytest

from monobit_uwb import (LinkBudget, MonobitFrame, PulseSpec, SampledWaveform,
                         align_support, make_p_ref, modulate, quantize,
                         reference_samples, resample, scale_for_snr,
                         single_tap_channel, synthesize_noiseless)

T = 1e-10
B = 5e9


@pytest.fixture(scope="module")
def p_ref():
    return align_support(make_p_ref(PulseSpec(0.22e-9), single_tap_channel(), B))


class TestSynthesize:
    def test_single_symbol_is_scaled_reference(self, p_ref):
        rho = reference_samples(p_ref, T)
        n = 40
        w = synthesize_noiseless([1.0], p_ref, 2.5, T, n)
        expected = np.zeros(n)
        expected[:min(n, rho.size)] = 2.5 * rho[:n]
        np.testing.assert_allclose(w[0], expected, atol=1e-15)

    def test_negation(self, p_ref):
        sym = modulate([1, 0, 1, 1, 0, 0])
        w_pos = synthesize_noiseless(sym, p_ref, 1.0, T, 10)
        w_neg = synthesize_noiseless(-sym, p_ref, 1.0, T, 10)
        np.testing.assert_allclose(w_neg, -w_pos, atol=1e-15)

    def test_two_symbol_overlap_worked_example(self, p_ref):
        # symbols (+1, +1): the receive waveform is p_ref(t) + p_ref(t - T_s)
        n = 10
        w = synthesize_noiseless([1.0, 1.0], p_ref, 1.0, T, n)
        direct = resample(p_ref, T, p_ref.start_time, 2 * n)
        shifted = np.zeros(2 * n)
        shifted[n:] = direct[:n]
        np.testing.assert_allclose(w.reshape(-1), direct + shifted, rtol=1e-12, atol=1e-15)


class TestQuantize:
    def test_deterministic(self):
        w = np.zeros((4, 8))
        a = quantize(w, 99, T)
        b = quantize(w, 99, T)
        np.testing.assert_array_equal(a.samples, b.samples)
        assert a.sample_period == T

    def test_strong_positive_signal(self):
        w = np.full((100, 100), 10.0)
        frame = quantize(w, 0, T)
        assert np.mean(frame.samples == 1) > 0.999

    def test_zero_signal_is_symmetric(self):
        w = np.zeros((200, 50))
        frame = quantize(w, 17, T)
        assert abs(float(np.mean(frame.samples))) < 4.0 / math.sqrt(w.size)

    def test_exact_zero_maps_to_minus_one(self):
        # engineered so w + n == 0 exactly at every sample
        rng = np.random.default_rng(5)
        noise = rng.standard_normal((3, 7))
        frame = quantize(-noise, 5, T)
        assert (frame.samples == -1).all()

    def test_matches_q_function_law(self):
        from monobit_uwb import q_function
        draws = 200_000
        for w0 in (-1.0, 1.0):
            frame = quantize(np.full((1, draws), w0), 123, T)
            p_hat = float(np.mean(frame.samples == 1))
            p = 1.0 - q_function(w0)
            sigma = math.sqrt(p * (1 - p) / draws)
            assert abs(p_hat - p) < 3 * sigma

    def test_samples_uncorrelated(self):
        draws = 100_000
        frame = quantize(np.full((draws, 2), 0.3), 7, T)
        x = frame.samples.astype(float)
        x -= x.mean(axis=0)
        rho = float(np.mean(x[:, 0] * x[:, 1]) / (x[:, 0].std() * x[:, 1].std()))
        assert abs(rho) < 3.0 / math.sqrt(draws)

    def test_frame_validation(self):
        with pytest.raises(ValueError):
            MonobitFrame(np.array([[1, 0]], dtype=np.int8), T)


class TestScaleForSnr:
    def test_unit_energy_zero_db(self):
        p = SampledWaveform(np.array([1.0]), T)
        assert scale_for_snr(p, 0.0, T).amplitude == pytest.approx(1.0)

    def test_four_times_power(self):
        p = SampledWaveform(np.array([1.0]), T)
        assert scale_for_snr(p, 6.02, T).amplitude == pytest.approx(2.0, abs=2e-3)

    def test_cm1_budget_round_trip(self):
        from monobit_uwb import SvParams, generate_sv_channel
        ch = generate_sv_channel(SvParams(), 21)
        p = align_support(make_p_ref(PulseSpec(0.22e-9), ch, B))
        budget = scale_for_snr(p, 10.0, T)
        # independent energy recomputation from the resampled support
        rho = resample(p, T, p.start_time, len(p) // 16 + 1)
        measured = budget.amplitude ** 2 * float(np.dot(rho, rho))
        assert measured == pytest.approx(10.0, abs=1e-9)

    def test_zero_energy_rejected(self):
        p = SampledWaveform(np.zeros(4), T)
        with pytest.raises(ValueError):
            scale_for_snr(p, 0.0, T)

    def test_budget_validation(self):
        with pytest.raises(ValueError):
            LinkBudget(0.0, -1.0)


def test_frame_determinism_end_to_end(p_ref):
    from monobit_uwb import GeneratorSpec, encode
    g = GeneratorSpec((0o5, 0o7))
    info = np.array([1, 0, 1, 1, 0], dtype=np.uint8)
    sym = modulate(encode(info, g))
    w = synthesize_noiseless(sym, p_ref, 1.7, T, 10)
    a = quantize(w, 4242, T)
    b = quantize(w, 4242, T)
    np.testing.assert_array_equal(a.samples, b.samples)
