"""Workload-to-temperature simulator for tile-based CNN accelerators.

Stages: parse configs (model), assign and schedule layers at pixel
granularity (scheduling), turn schedules into transient power traces (power),
place components by annealed slicing trees (floorplan), and solve a compact
RC network for steady and transient temperatures (thermal).  The pipeline
module chains them; the cli module exposes each stage as a subcommand.
"""

from .model import (
    ConfigError,
    Scenario,
    load_scenario,
    parse_architecture,
    parse_energy_table,
    parse_package,
    parse_workload,
)
from .scheduling import SchedulingError, assign_layers, count_actions, schedule
from .power import PowerError, pixel_power_trace
from .floorplan import FloorplanError, anneal, lump, refine
from .thermal import ThermalError, build_network, simulate_transient, solve_steady
from .pipeline import (
    PipelineError,
    compare_floorplans,
    run_pipeline,
    upper_bound,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "FloorplanError",
    "PipelineError",
    "PowerError",
    "Scenario",
    "SchedulingError",
    "ThermalError",
    "__version__",
    "anneal",
    "assign_layers",
    "build_network",
    "compare_floorplans",
    "count_actions",
    "load_scenario",
    "lump",
    "parse_architecture",
    "parse_energy_table",
    "parse_package",
    "parse_workload",
    "pixel_power_trace",
    "refine",
    "run_pipeline",
    "schedule",
    "simulate_transient",
    "solve_steady",
    "upper_bound",
]
