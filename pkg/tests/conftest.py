import sys

import numpy as np
import pytest

from isotori.bianchi import build_cube
from isotori.darboux import closed_darboux_discrete, closed_darboux_smooth, move_transform_off_plane
from isotori.loops import make_circle, make_discrete_circle
from isotori.torus import default_walk_2torus, extract_torus, product_grid_map

QUARTER = np.pi / 4
EIGHTH = np.pi / 8


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def circle256():
    return make_circle(3, 256)


@pytest.fixture(scope="session")
def circle1024():
    return make_circle(3, 1024)


@pytest.fixture(scope="session")
def offplane_cube(circle1024):
    """Circle with its mu=3 and mu=8 transforms rotated toward e3."""
    layer = [
        move_transform_off_plane(closed_darboux_smooth(circle1024, 3.0), 3, QUARTER),
        move_transform_off_plane(closed_darboux_smooth(circle1024, 8.0), 3, EIGHTH),
    ]
    return build_cube(circle1024, layer)


@pytest.fixture(scope="session")
def offplane_net(offplane_cube):
    return extract_torus(offplane_cube, default_walk_2torus(2))


@pytest.fixture(scope="session")
def polygon24():
    return make_discrete_circle(3, 24, -1.0)


@pytest.fixture(scope="session")
def discrete_cube(polygon24):
    layer = [
        move_transform_off_plane(closed_darboux_discrete(polygon24, 3.0), 3, QUARTER),
        move_transform_off_plane(closed_darboux_discrete(polygon24, 8.0), 3, EIGHTH),
    ]
    return build_cube(polygon24, layer)


@pytest.fixture(scope="session")
def discrete_net(discrete_cube):
    return extract_torus(discrete_cube, default_walk_2torus(2))


@pytest.fixture(scope="session")
def net_r4():
    circle = make_circle(4, 1024)
    layer = [
        move_transform_off_plane(closed_darboux_smooth(circle, 3.0), 3, QUARTER),
        move_transform_off_plane(closed_darboux_smooth(circle, 8.0), 4, EIGHTH),
        closed_darboux_smooth(circle, 5.0),
    ]
    cube = build_cube(circle, layer)
    return extract_torus(cube, product_grid_map(3, 3))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results, key=lambda k: int(k[1:])):
        terminalreporter.write_line(results[key])
