import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from efflandscape.analytic import squarewell_E0
from efflandscape.exceptions import PotentialError
from efflandscape.grid import build_grid
from efflandscape.potentials import PotentialField, SquareWell, Tabulated, Zero, sample_potential
from efflandscape.spectral import (
    CountingCurve,
    DiscreteOperator,
    assemble,
    count_below,
    count_many,
    negative_moment,
    spectrum_below,
    write_curves_csv,
)


def laplacian3():
    g = build_grid(1, 2.0, 1.0, 2.0)
    return assemble(sample_potential(Zero(), g), 0.0)


def test_stencil():
    g = build_grid(1, 2.0, 1.0, 2.0)
    op = assemble(sample_potential(Zero(), g), 1.0)
    np.testing.assert_array_equal(op.diag, [3, 3, 3])
    np.testing.assert_array_equal(op.off, [-1, -1])


def test_well_diagonal():
    g = build_grid(1, 2.0, 0.5, 2.0)
    op = assemble(sample_potential(SquareWell(1.0, 1.0), g), 0.0)
    assert op.diag[g.n // 2] == 2 / 0.25 - 1


def test_mismatched_potential():
    g = build_grid(1, 2.0, 1.0, 2.0)
    with pytest.raises(PotentialError):
        assemble(PotentialField(g, np.zeros(5)), 0.0)


def test_count_at_eigenvalue_uses_leq():
    assert count_below(laplacian3(), 2.0) == 2


def test_positive_operator_count():
    g = build_grid(1, 5.0, 0.5, 5.0)
    op = assemble(sample_potential(Zero(), g), 1.0)
    assert count_below(op, 0.5) == 0


def test_single_bound_state():
    g = build_grid(1, 20.0, 0.01, 15.0)
    op = assemble(sample_potential(SquareWell(1.0, 1.0), g), 0.0)
    assert count_below(op, -1e-12) == 1


def test_laplacian_spectrum():
    eigs = spectrum_below(laplacian3(), 10.0, 1e-12)
    np.testing.assert_allclose(eigs, [2 - math.sqrt(2), 2, 2 + math.sqrt(2)], atol=1e-11)


def test_empty_spectrum():
    g = build_grid(1, 5.0, 0.5, 5.0)
    assert spectrum_below(assemble(sample_potential(Zero(), g), 1.0), 0.9, 1e-8).size == 0


def test_tol_must_be_positive():
    with pytest.raises(ValueError):
        spectrum_below(laplacian3(), 1.0, 0.0)


def test_square_well_ground_state(well_op):
    # operator is shifted by M = 2
    eigs = spectrum_below(well_op, 2.0, 1e-10) - 2.0
    assert eigs.size == 1
    assert eigs[0] == pytest.approx(squarewell_E0(1.0, 1.0), abs=1e-6)


def random_operator(n, seed):
    rng = np.random.default_rng(seed)
    g = build_grid(1, (n + 1) * 0.05, 0.1, (n + 1) * 0.05)
    return assemble(PotentialField(g, rng.normal(0, 50, g.n)), 0.0)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 199), seed=st.integers(0, 2**32 - 1))
def test_inertia_matches_dense(n, seed):
    op = random_operator(n, seed)
    ev = np.linalg.eigvalsh(op.to_dense())
    lo, hi = op.gershgorin()
    mus = np.linspace(lo - 1, hi + 1, 100)
    got = count_many(op, mus)
    want = [int(np.sum(ev <= m)) for m in mus]
    # dense rounding can only matter within a few ulps of an eigenvalue
    gap = [np.min(np.abs(ev - m)) for m in mus]
    for g_, w_, d in zip(got, want, gap):
        if d > 1e-9 * op.norm_inf():
            assert g_ == w_


def test_counts_exactly_at_dense_eigenvalues():
    op = laplacian3()
    for k, e in enumerate([2 - math.sqrt(2), 2.0, 2 + math.sqrt(2)]):
        assert count_below(op, e + 1e-12) == k + 1


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(-100, 100), mu=st.floats(-200, 400))
def test_shift_covariance(seed, c, mu):
    op = random_operator(60, seed)
    c = float(np.float32(c))  # keep the shift exactly representable after the add
    assert count_below(op.shifted(c), mu + c) == count_below(op, mu) or _near_eigenvalue(op, mu)


def _near_eigenvalue(op, mu):
    ev = np.linalg.eigvalsh(op.to_dense())
    return np.min(np.abs(ev - mu)) < 1e-9 * max(1.0, op.norm_inf())


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_monotone_in_mu(seed):
    op = random_operator(80, seed)
    lo, hi = op.gershgorin()
    counts = count_many(op, np.linspace(lo, hi, 200))
    assert np.all(np.diff(counts) >= 0)
    assert counts[-1] == op.n


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_monotone_in_potential(seed):
    rng = np.random.default_rng(seed)
    g = build_grid(1, 5.0, 0.1, 5.0)
    v1 = rng.normal(0, 20, g.n)
    v2 = v1 + rng.random(g.n) * 10
    op1 = assemble(PotentialField(g, v1), 0.0)
    op2 = assemble(PotentialField(g, v2), 0.0)
    for mu in np.linspace(-60, 500, 40):
        assert count_below(op1, mu) >= count_below(op2, mu)


def test_threads_do_not_change_counts():
    op = random_operator(150, 7)
    mus = np.linspace(-100, 900, 64)
    assert count_many(op, mus, threads=4) == count_many(op, mus, threads=1)


def test_zero_pivot_is_counted():
    # 1x1 operator with eigenvalue exactly mu
    op = DiscreteOperator(grid=None, diag=np.array([1.5]), off=np.array([]), M=0.0)
    assert count_below(op, 1.5) == 1
    assert count_below(op, np.nextafter(1.5, 0)) == 0


def test_moments_two_eigenvalues():
    for gamma, want in ((1, 5.0), (2, 17.0)):
        assert negative_moment([-4.0, -1.0], gamma, "sum") == want
        assert negative_moment([-4.0, -1.0], gamma, "integral") == pytest.approx(want, abs=1e-12)


def test_moment_from_curve():
    curve = CountingCurve.from_eigenvalues([-4.0, -1.0, -1.0, 3.0])
    assert negative_moment(curve, 1, "sum") == 6.0
    assert negative_moment(curve, 1, "integral") == pytest.approx(6.0)


def test_moment_square_well(well_op):
    eigs = spectrum_below(well_op, 2.0, 1e-12) - 2.0
    s = negative_moment(eigs, 1.0, "sum")
    i = negative_moment(eigs, 1.0, "integral")
    assert abs(s - i) < 1e-10
    assert s == pytest.approx(abs(squarewell_E0(1.0, 1.0)), abs=1e-6)


def test_moment_gamma_positive():
    with pytest.raises(ValueError):
        negative_moment([-1.0], 0.0)


@settings(max_examples=100, deadline=None)
@given(
    eigs=st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=0, max_size=40),
    gamma=st.sampled_from([0.5, 1.0, 1.5, 2.0, 3.0]),
)
def test_layer_cake(eigs, gamma):
    s = negative_moment(eigs, gamma, "sum")
    i = negative_moment(eigs, gamma, "integral")
    assert abs(s - i) <= 1e-10 * max(1.0, s)


def test_curve_validation(tmp_path):
    with pytest.raises(ValueError):
        CountingCurve([1.0, 0.0], [0, 1], "inertia")
    with pytest.raises(ValueError):
        CountingCurve([0.0], [1], "guess")
    c = CountingCurve([0.1, 0.2], [0, 3], "inertia")
    write_curves_csv(tmp_path / "c.csv", [c])
    assert (tmp_path / "c.csv").read_text().splitlines() == [
        "mu,count,provenance",
        "0.10000000000000001,0,inertia",
        "0.20000000000000001,3,inertia",
    ]


def test_tabulated_operator():
    g = build_grid(1, 1.0, 0.5, 1.0)
    op = assemble(sample_potential(Tabulated([1.0, 2.0, 3.0]), g), 0.0)
    np.testing.assert_array_equal(op.diag, [9, 10, 11])
