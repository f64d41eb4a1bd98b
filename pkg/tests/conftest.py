import pathlib

import pytest

from tiletherm import pipeline as pl
from tiletherm import power as pw
from tiletherm import scheduling as sch
from tiletherm.model import load_scenario

DATA = pathlib.Path(__file__).resolve().parents[1] / "src" / "tiletherm" / "data"


@pytest.fixture(scope="session")
def scenario():
    return load_scenario(str(DATA / "scenario.toml"))


@pytest.fixture(scope="session")
def shipped_schedule(scenario):
    """Mapping + schedule of the shipped workload, computed once per run."""
    mapping = sch.assign_layers(scenario.workload, scenario.architecture)
    strace = sch.schedule(scenario.workload, mapping, scenario.architecture)
    return mapping, strace


@pytest.fixture(scope="session")
def shipped_trace(scenario, shipped_schedule):
    mapping, strace = shipped_schedule
    actions = sch.count_actions(scenario.workload, mapping, scenario.architecture)
    return pw.pixel_power_trace(strace, actions, scenario.energy,
                                scenario.architecture)


@pytest.fixture(scope="session")
def pipeline_result(scenario, tmp_path_factory):
    out = tmp_path_factory.mktemp("pipeline")
    result = pl.run_pipeline(scenario, str(out), heatmap=True)
    return result, out
