import sys
from functools import lru_cache

import pytest

from hodgewave.cli import bundled_mesh
from hodgewave.mesh import build_complex, read_off
from hodgewave.metric import MaterialFields
from hodgewave.operators import Discretization

WITH_BOUNDARY = ["triangle", "square", "rectangle_8", "rectangle_16", "annulus", "tetrahedron", "cube", "segment"]
CLOSED = ["icosphere_1", "icosphere_2", "torus"]


@lru_cache(maxsize=None)
def disc(name: str) -> Discretization:
    return Discretization.from_complex(build_complex(read_off(bundled_mesh(name))))


@pytest.fixture
def load():
    return disc


@pytest.fixture
def unit_materials():
    def make(d):
        return MaterialFields.constant(d.complex)

    return make


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
