"""Experiment configuration, orchestration and reports."""

from src.core.config import ExperimentConfig, load_config, parse_config
from src.core.experiment import (
    evaluate_checkpoint,
    run_experiment,
    run_gradcheck,
    run_grid,
    run_knn,
    run_networks,
)
from src.core.report import ReportRow, render_network_table, render_results_table, save_report

__all__ = [
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "evaluate_checkpoint",
    "run_experiment",
    "run_gradcheck",
    "run_grid",
    "run_knn",
    "run_networks",
    "ReportRow",
    "render_network_table",
    "render_results_table",
    "save_report",
]
