"""Benchmark datasets, experiment runner and command line interface."""

from .datasets import LabeledDataset, gen_waveform_dataset, load_features, load_ucr, load_ucr_split
from .experiment import ExperimentConfig, ExperimentResult, baseline_linear, run_sweep, run_task

__all__ = [
    "LabeledDataset", "gen_waveform_dataset", "load_features", "load_ucr", "load_ucr_split",
    "ExperimentConfig", "ExperimentResult", "baseline_linear", "run_sweep", "run_task",
]
