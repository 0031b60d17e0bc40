"""Numerical wave front set detection with compactly supported STFT windows."""
from .core import (Cone, Grid, PhasePoint, Regularization, SampledSignal, ShellPartition, WindowSpec,
                   cone_contains, window_eval, window_seminorm)
from .stft import (StftTable, SupportError, fourier_transform, parseval_check, stft_closed_form,
                   stft_discrete)
from .cones import ConePair, fattening_sample_check, max_nesting_constant, shell_cone_indices
from .decay import (DecayFit, ShellStats, SobolevTail, TailVerdict, ThresholdError, decay_exponent,
                    shell_sup, sobolev_cone_norm, sobolev_threshold_estimate, tail_convergence_verdict)
from .detectors import (DetectorConfig, MicrolocalVerdict, Verdict, seminorm_uniformity_audit,
                        wf_map, wf_smooth_detect, wf_sobolev_detect, window_robustness_audit)
from .corpus import corpus_members, get_member, sample, validate_against_ground_truth

__version__ = "0.1.0"
