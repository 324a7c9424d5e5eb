import numpy as np
import pytest

from efflandscape import bounds
from efflandscape.grid import build_grid
from efflandscape.landscape import solve_landscape
from efflandscape.potentials import SquareWell, sample_potential
from efflandscape.spectral import assemble

POS_MUS = [float(m) for m in np.linspace(0.06, 3.0, 50)]
NEG_MUS = [float(m) for m in np.linspace(-0.45, -0.01, 45)]


@pytest.fixture(scope="session")
def well_grid():
    return build_grid(1, 20.0, 1e-3, 15.0)


@pytest.fixture(scope="session")
def well_potential(well_grid):
    return sample_potential(SquareWell(1.0, 1.0), well_grid)


@pytest.fixture(scope="session")
def well_op(well_potential):
    return assemble(well_potential, 2.0)


@pytest.fixture(scope="session")
def well_field(well_op):
    return solve_landscape(well_op)


@pytest.fixture(scope="session")
def well_model(well_field, well_op):
    return bounds.model_from_operator(well_field, well_op)


@pytest.fixture(scope="session")
def well_constants(well_field):
    return bounds.clr_constants(well_field, POS_MUS)


@pytest.fixture(scope="session")
def coarse_well():
    """Cheaper square-well setup for property tests."""
    g = build_grid(1, 12.0, 0.01, 9.0)
    op = assemble(sample_potential(SquareWell(1.0, 1.0), g), 2.0)
    return g, op, solve_landscape(op)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
