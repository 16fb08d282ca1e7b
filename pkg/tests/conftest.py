"""Shared fixtures: meshes are expensive to assemble, so the common ones are
session scoped (they are immutable and the operator caches key off them)."""

import numpy as np
import pytest

from resona.geometry import cubic_lattice, make_dimer, make_sphere_mesh


@pytest.fixture(scope="session")
def sphere_r1():
    return make_sphere_mesh((0.0, 0.0, 0.0), 1.0, 1)


@pytest.fixture(scope="session")
def sphere_r2():
    return make_sphere_mesh((0.0, 0.0, 0.0), 1.0, 2)


@pytest.fixture(scope="session")
def sphere_r3():
    return make_sphere_mesh((0.0, 0.0, 0.0), 1.0, 3)


@pytest.fixture(scope="session")
def unit_volume_radius():
    # radius making the refinement-1 discrete (polyhedral) volume exactly 1
    probe = make_sphere_mesh((0.0, 0.0, 0.0), 1.0, 1)
    return (1.0 / probe.volumes[0]) ** (1.0 / 3.0)


@pytest.fixture(scope="session")
def dimer_unit_volume(unit_volume_radius):
    r = unit_volume_radius
    return make_dimer(r, 0.25 * r, 1)


@pytest.fixture(scope="session")
def lattice3():
    return cubic_lattice(1.0)


@pytest.fixture(scope="session")
def lattice_sphere():
    return make_sphere_mesh((0.0, 0.0, 0.0), 0.25, 1)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260811)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance-criterion lines after the run, outside capture."""
    try:
        from test_acceptance import REPORT_LINES
    except ImportError:
        return
    if REPORT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in REPORT_LINES:
            terminalreporter.write_line(line)
