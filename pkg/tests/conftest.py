"""Shared fixtures: bundled scenarios and small hand-built platoons."""
import numpy as np
import pytest

from platoon_nash.model import Scenario, TopologyGraph
from platoon_nash.scenario_io import bundled_scenarios, parse_scenario

TABLE_SCENARIOS = ("pf_s1", "pf_s2", "tpf_s3", "tpf_s4", "apf", "lf")


def load(name):
    return parse_scenario(bundled_scenarios()[name]).scenario


@pytest.fixture(scope="session")
def scenarios():
    return {name: load(name) for name in bundled_scenarios()}


@pytest.fixture(params=TABLE_SCENARIOS)
def table_scenario(request, scenarios):
    return scenarios[request.param]


@pytest.fixture
def pf_small():
    return Scenario(2, 5.0, [1.0, 0.4, -0.3], [-0.25, -0.25], TopologyGraph.pf([1.0, 0.5]))


def rng(seed=0):
    return np.random.default_rng(seed)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.verdict_lines():
        terminalreporter.write_line(line)
