from __future__ import annotations

import math

import numpy as np
import pytest

from sectorshock.background import EntranceData, NozzleGeom, profile_for_shock
from sectorshock.driver import SolverConfig, solve_for_exit_pressure
from sectorshock.upstream import PerturbationSpec

GAMMA = 1.4
PHI0 = math.pi / 6

# Short nozzle with a strong shock (exit Mach about 0.18).
BASE_GEOM = NozzleGeom(1.0, 3.0, PHI0)
BASE_ENTRANCE = EntranceData(1.0, 2.0, 0.5)
BASE_RSH = 2.0

# Moderate exit Mach (about 0.43): the small-sigma regime is linear here.
WIDE_GEOM = NozzleGeom(9.0, 11.5, PHI0)
WIDE_ENTRANCE = EntranceData(1.0, 1.3, 0.7)
WIDE_RSH = 10.0

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def base_profile():
    return profile_for_shock(BASE_GEOM, BASE_ENTRANCE, BASE_RSH, GAMMA)


@pytest.fixture(scope="session")
def wide_profile():
    return profile_for_shock(WIDE_GEOM, WIDE_ENTRANCE, WIDE_RSH, GAMMA)


def grid_config(n_r: int, **kw) -> SolverConfig:
    return SolverConfig(n_r=n_r, n_phi=(n_r - 1) // 2 + 1, **kw)


@pytest.fixture(scope="session")
def wide_solve(wide_profile):
    """Memoised exit-pressure solves on the wide nozzle."""
    cache = {}

    def run(sigma: float, n_r: int = 33, front_value=None, **spec):
        key = (sigma, n_r, front_value, tuple(sorted(spec.items())))
        if key not in cache:
            cache[key] = solve_for_exit_pressure(
                wide_profile, PerturbationSpec(sigma, **spec), None, grid_config(n_r),
                front_value=front_value)
        return cache[key]

    return run


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
