"""Shared, session-cached scenario runs."""

from dataclasses import replace

import pytest

from nladhesion import SolverConfig, Simulator
from nladhesion.coupler import epsilon_continuation

EPS_LIST = [1e-1, 1e-2, 1e-3, 1e-4]


@pytest.fixture(scope="session")
def default_config():
    return SolverConfig()


@pytest.fixture(scope="session")
def default_run(default_config):
    sim = Simulator(default_config)
    return sim, sim.run()


@pytest.fixture(scope="session")
def peeling_config():
    # upward pull on the top edge, weak cohesion: real (partial) debonding
    return replace(SolverConfig(), nx=8, ny=8, f=(0.0, 0.0), h=(0.0, 1.5),
                   traction_edges=("top",), gamma_c0=0.01, gamma_c1=-0.01,
                   T_final=0.5)


@pytest.fixture(scope="session")
def peeling_run(peeling_config):
    sim = Simulator(peeling_config)
    return sim, sim.run()


@pytest.fixture(scope="session")
def eps_study(default_config):
    return epsilon_continuation(default_config, EPS_LIST)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
