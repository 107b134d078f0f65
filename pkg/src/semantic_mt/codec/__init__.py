"""Simulation of the detect-and-compress scheme and its compress-then-detect baseline."""

from .clustering import np_cluster
from .entropy import ArithmeticCoder, entropy_code_rate, plugin_conditional_entropy
from .fusion import empirical_log_loss, fuse_labels, label_equivocation
from .ldpc import DegreeProfile, LdpcCode, ProfileError, build_ldpc, load_profile, parse_profile
from .quantizer import dequantize, dithered_quantize, step_for_distortion
from .slepian_wolf import sw_decode, sw_encode
from .trial import CodecConfig, TrialReport, run_baseline_trial, run_trial, run_trials

__all__ = [
    "ArithmeticCoder",
    "CodecConfig",
    "DegreeProfile",
    "LdpcCode",
    "ProfileError",
    "TrialReport",
    "build_ldpc",
    "dequantize",
    "dithered_quantize",
    "empirical_log_loss",
    "entropy_code_rate",
    "fuse_labels",
    "label_equivocation",
    "load_profile",
    "np_cluster",
    "parse_profile",
    "plugin_conditional_entropy",
    "run_baseline_trial",
    "run_trial",
    "run_trials",
    "step_for_distortion",
    "sw_decode",
    "sw_encode",
]
