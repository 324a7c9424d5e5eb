import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from efflandscape.analytic import squarewell_E0
from efflandscape.exceptions import IndefiniteOperatorError
from efflandscape.grid import build_grid
from efflandscape.groundstate import groundstate_lower_bound, iterate_M
from efflandscape.landscape import solve_landscape
from efflandscape.potentials import PowerLaw, SquareWell, Zero, sample_potential
from efflandscape.radial3d import build_radial_grid, radial_landscape
from efflandscape.spectral import assemble, spectrum_below

E0 = squarewell_E0(1.0, 1.0)


def test_zero_potential_bound():
    g = build_grid(1, 20.0, 0.01, 8.0)
    f = solve_landscape(assemble(sample_potential(Zero(), g), 3.0))
    assert groundstate_lower_bound(f) == pytest.approx(0.0, abs=1e-8)


def test_square_well_bound(well_field):
    lb = groundstate_lower_bound(well_field)
    assert lb == pytest.approx(-0.7332, abs=1e-4)
    assert lb <= E0


def test_hydrogen_bound():
    g = build_radial_grid(1e-3, 60.0, 40.0)
    assert groundstate_lower_bound(radial_landscape(PowerLaw(1.0), 1.0, g)) <= -0.25


@settings(max_examples=20, deadline=None)
@given(M=st.floats(0.47, 30.0))
def test_bound_below_discrete_energy(coarse_well, M):
    g = coarse_well[0]
    V = sample_potential(SquareWell(1.0, 1.0), g)
    f = solve_landscape(assemble(V, M))
    e0 = spectrum_below(assemble(V, 0.0), 0.0, 1e-12)[0]
    assert groundstate_lower_bound(f) <= e0


def test_zero_potential_stops_at_boundary():
    g = build_grid(1, 20.0, 0.01, 8.0)
    tr = iterate_M(Zero(), g, 5.0, 1e-8)
    assert tr.M == [5.0, 0.0]
    assert tr.reason == "boundary" and tr.E0_estimate == 0.0


def test_square_well_iteration(well_grid):
    tr = iterate_M(SquareWell(1.0, 1.0), well_grid, 10.0, 1e-8)
    assert tr.converged and tr.reason == "tolerance"
    assert np.all(np.diff(tr.M) < 0)
    assert np.all(np.diff(tr.max_u) > 0)
    assert abs(tr.final_M + E0) < 1e-3
    assert tr.max_u[-1] > 1e3


def test_every_iterate_stays_admissible(coarse_well):
    g = coarse_well[0]
    V = sample_potential(SquareWell(1.0, 1.0), g)
    e0 = spectrum_below(assemble(V, 0.0), 0.0, 1e-12)[0]
    tr = iterate_M(SquareWell(1.0, 1.0), g, 10.0, 1e-6)
    assert all(M > -e0 for M in tr.M)
    # each lower bound sits below the discrete ground state
    assert all(-(M - a) <= e0 + 1e-12 for M, a in zip(tr.M, tr.inf_inv_u))


def test_indefinite_start(well_grid):
    with pytest.raises(IndefiniteOperatorError):
        iterate_M(SquareWell(1.0, 1.0), well_grid, 0.2, 1e-6)


def test_max_steps(coarse_well):
    tr = iterate_M(SquareWell(1.0, 1.0), coarse_well[0], 10.0, 1e-14, max_steps=3)
    assert tr.reason == "max_steps" and not tr.converged and tr.steps == 3


def test_trace_csv(tmp_path, coarse_well):
    tr = iterate_M(SquareWell(1.0, 1.0), coarse_well[0], 10.0, 1e-4)
    tr.write_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "step,M,inf_inv_u,max_u"
    assert len(lines) == len(tr.M) + 1 and lines[-1].endswith("NA,NA")


def test_hydrogen_iteration():
    g = build_radial_grid(2e-3, 80.0)
    tr = iterate_M(PowerLaw(1.0), g, 1.0, 1e-7)
    assert tr.final_M == pytest.approx(0.25, abs=1e-3)
