"""Monte Carlo study of joint Viterbi decoding and decision-feedback
equalization for 1-bit quantized impulse-radio UWB receivers."""

from .channel import (ChannelRealization, SvParams, align_support, filtered_pulse,
                      generate_sv_channel, load_channel, make_p_ref, save_channel,
                      single_tap_channel)
from .coding import GeneratorSpec, Trellis, build_trellis, encode, modulate
from .decoder import (PROB_FLOOR, branch_metric, candidate_window, cascade_dfe_viterbi,
                      cascade_soft_demod, full_resolution_soft_viterbi, joint_viterbi_dfe,
                      monobit_soft_viterbi_noisi, q_function, trace_joint_decode, traceback)
from .frontend import (LinkBudget, MonobitFrame, add_noise, quantize, reference_samples,
                       scale_for_snr, synthesize_noiseless)
from .harness import (MODES, BerPoint, ExperimentConfig, channel_seeds, emit_plot,
                      read_csv, run_sweep, write_csv)
from .waveform import (OVERSAMPLING, PulseSpec, SampledWaveform, brickwall_lpf, convolve,
                       gaussian2_pulse, resample, sampled_support)

__version__ = "0.1.0"

__all__ = [
    "OVERSAMPLING", "PROB_FLOOR", "MODES",
    "SampledWaveform", "PulseSpec", "gaussian2_pulse", "convolve", "brickwall_lpf",
    "resample", "sampled_support",
    "ChannelRealization", "SvParams", "generate_sv_channel", "single_tap_channel",
    "load_channel", "save_channel", "filtered_pulse", "make_p_ref", "align_support",
    "GeneratorSpec", "Trellis", "encode", "build_trellis", "modulate",
    "MonobitFrame", "LinkBudget", "synthesize_noiseless", "add_noise", "quantize",
    "scale_for_snr", "reference_samples",
    "q_function", "branch_metric", "joint_viterbi_dfe", "cascade_dfe_viterbi",
    "cascade_soft_demod", "full_resolution_soft_viterbi", "monobit_soft_viterbi_noisi",
    "candidate_window", "trace_joint_decode", "traceback",
    "ExperimentConfig", "BerPoint", "run_sweep", "write_csv", "read_csv", "emit_plot",
    "channel_seeds",
    "__version__",
]
