import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from karst.mesh import DomainGeometry, mesh_family

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def geom():
    return DomainGeometry(1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def rect_mesh(geom):
    return mesh_family(geom, 4, 3, 0.5)


@pytest.fixture
def tri_mesh(geom):
    return mesh_family(geom, 4, 3, 0.5, triangles=True)


# acceptance lines are collected here and printed after the run, so they
# show up in the plain ``pytest -v`` log as well
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_line():
    def record(number: int, name: str, passed: bool, detail: str):
        line = f"ACCEPTANCE {number:2d} {'PASS' if passed else 'FAIL'}  {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


@pytest.fixture
def diagnostic_line():
    def record(text: str):
        line = f"DIAGNOSTIC {text}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
