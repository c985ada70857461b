"""Experiment orchestration and the ``chaoticqa`` command line."""

from .cli import main
from .config import ExperimentConfig, build_config, load_config

__all__ = ["ExperimentConfig", "build_config", "load_config", "main"]
