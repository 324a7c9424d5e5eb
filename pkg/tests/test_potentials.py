import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from efflandscape.exceptions import PotentialError
from efflandscape.grid import build_grid
from efflandscape.potentials import (
    PotentialSpec,
    PowerLaw,
    SquareWell,
    Tabulated,
    Zero,
    evaluate,
    kato_norm_estimate,
    sample_potential,
)
from efflandscape.radial3d import build_radial_grid


def test_zero_field():
    g = build_grid(1, 2.0, 0.5, 2.0)
    assert np.all(sample_potential(Zero(), g).values == 0)


def test_square_well_indicator():
    v = evaluate(SquareWell(1.0, 1.0), np.array([0.5, 1.5, -0.5, -1.5]))
    np.testing.assert_array_equal(v, [-1, 0, -1, 0])


def test_square_well_edge_takes_mean():
    assert evaluate(SquareWell(2.0, 1.0), np.array([1.0]))[0] == -1.0


def test_coulomb_radial_node():
    g = build_radial_grid(0.25, 2.0)
    f = sample_potential(PowerLaw(1.0), g)
    assert f.values[0] == pytest.approx(-4.0)


def test_power_law_rejects_origin_node():
    g = build_grid(1, 2.0, 0.5, 2.0)
    with pytest.raises(PotentialError):
        sample_potential(PowerLaw(0.5), g)


def test_power_law_exponent_limit():
    g = build_grid(1, 1.5, 1.0, 1.5)  # nodes -0.5, 0.5
    assert sample_potential(PowerLaw(0.5), g).values[0] == pytest.approx(-math.sqrt(2))
    with pytest.raises(PotentialError):
        sample_potential(PowerLaw(1.0), g)  # needs rho < 1 in one dimension
    with pytest.raises(PotentialError):
        PowerLaw(2.0).check_dimension(3)


def test_tabulated_length_mismatch():
    g = build_grid(1, 2.0, 0.5, 2.0)
    with pytest.raises(PotentialError):
        sample_potential(Tabulated([1.0, 2.0]), g)
    f = sample_potential(Tabulated([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]), g)
    assert f.values[3] == 4.0


def test_round_trip():
    for spec in (Zero(), SquareWell(1.0, 0.5), PowerLaw(1.5), Tabulated([1.0, 2.0], [0.0, 1.0])):
        assert PotentialSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(PotentialError):
        PotentialSpec.from_dict({"kind": "gaussian"})


def test_kato_zero():
    assert kato_norm_estimate(Zero(), 1).value == 0.0


def test_kato_square_well_1d():
    est = kato_norm_estimate(SquareWell(1.0, 0.5), 1)
    assert est.value == pytest.approx(1.0, abs=1e-8)


def test_kato_coulomb_3d():
    est = kato_norm_estimate(PowerLaw(1.0), 3)
    assert est.value == pytest.approx(4 * math.pi, rel=1e-6)
    assert abs(est.center) < 0.05


def test_kato_divergent_exponent():
    with pytest.raises(PotentialError):
        kato_norm_estimate(PowerLaw(1.0), 1)


@settings(max_examples=15, deadline=None)
@given(depth=st.floats(0.1, 10), shift=st.floats(-3, 3))
def test_kato_scaling_and_translation(depth, shift):
    base = kato_norm_estimate(SquareWell(1.0, 0.7), 1).value
    moved = kato_norm_estimate(SquareWell(depth, 0.7, center=shift), 1).value
    assert moved == pytest.approx(depth * base, rel=1e-8)


def test_sampling_is_pure():
    g = build_grid(1, 3.0, 0.1, 2.0)
    a = sample_potential(SquareWell(1.0, 1.0), g).values
    b = sample_potential(SquareWell(1.0, 1.0), g).values
    np.testing.assert_array_equal(a, b)
