"""Incremental learning with a clustered ensemble of decision trees."""

from .data import Dataset, Instance, Schema, SplitPlan, load_csv
from .engine import ExperimentConfig, ExperimentReport, run_experiment

__all__ = [
    "Dataset",
    "Instance",
    "Schema",
    "SplitPlan",
    "load_csv",
    "ExperimentConfig",
    "ExperimentReport",
    "run_experiment",
]
__version__ = "0.1.0"
