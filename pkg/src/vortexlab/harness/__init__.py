"""Experiment harness: scenario configs, run directories, sweeps, acceptance."""

from .config import ConfigError, DiagnosticsConfig, ScenarioConfig, VortexEntry, load_config, parse_config
from .report import fit_power_law, sweep_report
from .run import RunManifest, run_scenario
from .scenarios import builtin_scenarios, get_scenario

__all__ = [
    "ConfigError",
    "DiagnosticsConfig",
    "ScenarioConfig",
    "VortexEntry",
    "load_config",
    "parse_config",
    "fit_power_law",
    "sweep_report",
    "RunManifest",
    "run_scenario",
    "builtin_scenarios",
    "get_scenario",
]
