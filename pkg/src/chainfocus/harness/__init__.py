"""Seeded batch runs, CSV/PNG outputs, manifests and SVG plots."""
from .config import Experiment, RunConfig, load_config
from .plot import PlotError, emit_plot
from .runner import RunFailure, RunManifest, run_experiment

__all__ = ["Experiment", "RunConfig", "load_config", "emit_plot", "PlotError",
           "run_experiment", "RunManifest", "RunFailure"]
