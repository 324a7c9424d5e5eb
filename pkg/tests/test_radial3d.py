import math

import numpy as np
import pytest
from scipy.linalg import solve_banded

from efflandscape.analytic import hydrogen_count, hydrogen_level, hydrogen_midpoint
from efflandscape.exceptions import GridError, IndefiniteOperatorError, PotentialError
from efflandscape.potentials import PowerLaw, SquareWell, Zero
from efflandscape.radial3d import (
    asymptotics_ratio,
    build_radial_grid,
    decay_exponent,
    radial_count,
    radial_landscape,
    radial_operator,
    radial_sector_counts,
    write_asymptotics_csv,
)
from efflandscape.spectral import spectrum_below

H = PowerLaw(1.0)


@pytest.fixture(scope="module")
def hydrogen_grid():
    return build_radial_grid(1e-3, 400.0)


def test_grid():
    g = build_radial_grid(0.25, 2.0, 1.0)
    np.testing.assert_allclose(g.nodes, [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75])
    assert g.window_mask.sum() == 4
    with pytest.raises(GridError):
        build_radial_grid(0.3, 1.0)
    with pytest.raises(GridError):
        build_radial_grid(0.25, 2.0, 3.0)


def test_hydrogen_counts(hydrogen_grid):
    assert radial_count(H, -0.3, hydrogen_grid) == 0
    res = radial_sector_counts(H, -0.06, hydrogen_grid)
    assert res.total == 5 and res.sectors[:2] == ((0, 2), (1, 1))
    assert radial_count(H, -0.02, hydrogen_grid) == 14


def test_hydrogen_levels(hydrogen_grid):
    eigs = spectrum_below(radial_operator(H, 0, 0.0, hydrogen_grid), -0.015, 1e-13)
    for n in range(1, 5):
        assert eigs[n - 1] == pytest.approx(hydrogen_level(n), rel=1e-3)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 10])
def test_counts_match_oracle(hydrogen_grid, n):
    mu = hydrogen_midpoint(n)
    assert radial_count(H, mu, hydrogen_grid) == hydrogen_count(mu)


@pytest.mark.parametrize("mu", [-0.2, -0.05, -0.02, -0.008])
def test_ell_cutoff_is_safe(hydrogen_grid, mu):
    base = radial_sector_counts(H, mu, hydrogen_grid)
    last = base.sectors[-1][0]
    wider = radial_sector_counts(H, mu, hydrogen_grid, empty_sectors=7)
    assert wider.total == base.total
    assert wider.sectors[-1][0] == last + 5
    assert base.total == sum((2 * l + 1) * c for l, c in base.sectors)


def test_nonradial_rejected():
    with pytest.raises(PotentialError):
        radial_count(SquareWell(1.0, 1.0, center=0.5), -0.1, build_radial_grid(0.01, 10.0))
    with pytest.raises(ValueError):
        radial_count(H, 0.0, build_radial_grid(0.01, 10.0))


def test_zero_landscape():
    g = build_radial_grid(0.01, 40.0, 20.0)
    f = radial_landscape(Zero(), 1.0, g)
    assert np.max(np.abs(f.window_values() - 1.0)) < 1e-6


def test_indefinite_radial():
    with pytest.raises(IndefiniteOperatorError):
        radial_landscape(H, 0.2, build_radial_grid(0.01, 40.0))


def test_coulomb_effective_potential():
    g = build_radial_grid(1e-3, 200.0, 150.0)
    f = radial_landscape(H, 1.0, g)
    W = f.W
    assert W[f.grid.window_mask].min() <= -0.25
    r = g.nodes
    sel = (r >= 10) & (r <= 100)
    assert np.max(np.abs(W[sel] + 1 / r[sel]) * r[sel] ** 2) < 1.0
    assert decay_exponent(f) >= 1.8


def finite_volume_landscape(h, R, M):
    """Cell-centred solve of -(r² u')'/r² - u/r + M u = 1 with zero flux at 0 and u(R) = 0."""
    N = int(round(R / h))
    i = np.arange(1, N + 1)
    rm, rp, rc = (i - 1) * h, i * h, (i - 0.5) * h
    vol = (rp**3 - rm**3) / 3
    pot = -(rp**2 - rm**2) / 2  # exact cell integral of -r
    fp, fm = rp**2 / h, rm**2 / h
    main = vol * M + pot + fp + fm
    main[-1] += rp[-1] ** 2 / (h / 2) - fp[-1]
    upper = np.zeros(N)
    lower = np.zeros(N)
    upper[1:] = -fp[:-1]
    lower[:-1] = -fm[1:]
    return rc, solve_banded((1, 1), np.vstack([upper, main, lower]), vol)


def test_substitution_matches_direct_solve():
    h, R = 1e-3, 60.0
    rc, u_fv = finite_volume_landscape(h, R, 1.0)
    f = radial_landscape(H, 1.0, build_radial_grid(h, R))
    sel = (rc > 0.5) & (rc < 40)
    u = np.interp(rc[sel], f.grid.nodes, f.u)
    assert np.max(np.abs(u - u_fv[sel]) / u_fv[sel]) < 1e-6


def test_asymptotics_small_table(tmp_path):
    g = build_radial_grid(0.01, 400.0)
    mus = [-0.05, -0.02]
    rows, _ = asymptotics_ratio(H, 1.0, mus, g)
    assert [r.count_exact for r in rows] == [5, 14]
    assert all(r.ratio_b > 0 for r in rows)
    write_asymptotics_csv(tmp_path / "a.csv", rows)
    head = (tmp_path / "a.csv").read_text().splitlines()[0]
    assert head == "mu,count_exact,semiclassical,count_substituted,ratio_b,ratio_c"


def test_asymptotics_zero_potential():
    g = build_radial_grid(0.01, 100.0)
    rows, _ = asymptotics_ratio(Zero(), 1.0, [-0.05, -0.01], g)
    assert all(r.count_exact == 0 and r.ratio_b is None and r.ratio_c is None for r in rows)


def test_asymptotics_reject_nonnegative():
    with pytest.raises(ValueError):
        asymptotics_ratio(H, 1.0, [0.0], build_radial_grid(0.01, 100.0))


def test_weighted_volume():
    g = build_radial_grid(1e-3, 2.0)
    assert g.weights.sum() == pytest.approx(4 * math.pi * 8 / 3, rel=1e-3)
