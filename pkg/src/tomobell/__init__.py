"""Monte-Carlo tomographic Bell test on twin-beam homodyne data.

Homodyne events are sampled from the exact output state of a
nondegenerate parametric amplifier, photon-pair probabilities are
reconstructed with pattern functions that correct for detector
efficiency, and the Bell statistic is estimated with block errors.
"""
from .backend import BACKEND
from .estimator import (EventAccumulator, c_numerator_integrand, estimate_bell,
                        estimate_correlation, estimate_p11, p11_integrand)
from .kernel import KernelValues, kernel_diag, kernel_event, kernel_offdiag
from .model import (CHSH_ANGLES, BellAngles, BlockedEstimate, ConfigError, NopaParams,
                    QuadBatch, QuadSample, RunConfig, lambda_from_mean_photon,
                    mean_photon_number, validate_run_config)
from .oracle import (bell_closed_form, bell_exact, build_state, correlation_closed_form,
                     correlation_exact, rotate_and_project)
from .runner import RunReport, run_single, run_sweep
from .sampler import joint_pdf, sample_event, sample_events, sample_pair

__all__ = [
    "BACKEND",
    "EventAccumulator", "c_numerator_integrand", "estimate_bell", "estimate_correlation",
    "estimate_p11", "p11_integrand",
    "KernelValues", "kernel_diag", "kernel_event", "kernel_offdiag",
    "CHSH_ANGLES", "BellAngles", "BlockedEstimate", "ConfigError", "NopaParams", "QuadBatch",
    "QuadSample", "RunConfig", "lambda_from_mean_photon", "mean_photon_number", "validate_run_config",
    "bell_closed_form", "bell_exact", "build_state", "correlation_closed_form", "correlation_exact",
    "rotate_and_project",
    "RunReport", "run_single", "run_sweep",
    "joint_pdf", "sample_event", "sample_events", "sample_pair",
]

__version__ = "0.1.0"
