"""Experiment configuration, orchestration, persistence, and the CLI."""

from .config import ExperimentConfig, load_config
from .runner import (CSV_COLUMNS, ResultRow, run_coupling_scaling,
                     run_dlr_check, run_green_study,
                     run_ground_state_scaling, run_oracle_suite)
from .validate import run_validation_suite

__all__ = [
    "CSV_COLUMNS",
    "ExperimentConfig",
    "ResultRow",
    "load_config",
    "run_coupling_scaling",
    "run_dlr_check",
    "run_green_study",
    "run_ground_state_scaling",
    "run_oracle_suite",
    "run_validation_suite",
]
