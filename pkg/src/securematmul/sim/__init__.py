"""Simulation of workers, adversaries and experiments."""

from .errors import ERROR_MODELS, apply_error_model, error_matrices, observation1_attack
from .experiments import (DetectionConfig, FullRunConfig, FullRunResult, OverheadConfig,
                          RunFailed, TrialStats, run_detection_experiment,
                          run_full_scheme, run_overhead_experiment)
from .workers import BehaviorSpec, WorkerProfile, profile_from_dict

__all__ = [
    "ERROR_MODELS", "apply_error_model", "error_matrices", "observation1_attack",
    "DetectionConfig", "FullRunConfig", "FullRunResult", "OverheadConfig", "RunFailed",
    "TrialStats", "run_detection_experiment", "run_full_scheme", "run_overhead_experiment",
    "BehaviorSpec", "WorkerProfile", "profile_from_dict",
]
