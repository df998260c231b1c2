"""Metrics, experiment runner, reports, and figures."""

from vlkrl.evalharness.metrics import act_metrics, attribute_failure
from vlkrl.evalharness.experiment import (
    ExperimentConfig,
    low_resource_config,
    run_experiment,
    train_policy,
)
from vlkrl.evalharness.report import EpisodeRecord, RunReport, load_report, write_report

__all__ = [
    "EpisodeRecord",
    "ExperimentConfig",
    "RunReport",
    "act_metrics",
    "attribute_failure",
    "load_report",
    "low_resource_config",
    "run_experiment",
    "train_policy",
    "write_report",
]
