"""Simulation library for a UAV swarm tracking moving targets under mobile jammers."""

from .core import ConfigError, RngStream, Scenario, ScenarioConfig, build_scenario
from .io import __version__

__all__ = ["ConfigError", "RngStream", "Scenario", "ScenarioConfig", "build_scenario", "__version__"]
