"""Configured experiments: figure reproductions, convergence harnesses and the CLI."""

from .config import ConfigError, RunConfig, bundled, load_config, parse_config
from .metrics import InterfaceError, dominant_mode, front_speed, interface_metrics, pattern_variance, persists
from .runner import RunManifest, run_experiment

__all__ = ["ConfigError", "RunConfig", "bundled", "load_config", "parse_config", "InterfaceError",
           "dominant_mode", "front_speed", "interface_metrics", "pattern_variance", "persists",
           "RunManifest", "run_experiment"]
