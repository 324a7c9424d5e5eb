"""Landscape functions, effective potentials and eigenvalue-counting bounds for Schrödinger operators."""

from .analytic import SquareWellClosedForm, hydrogen_count, squarewell_E0, squarewell_landscape
from .grid import Grid, build_grid, box_partition
from .landscape import LandscapeField, effective_potential, harnack_constants, solve_landscape
from .potentials import PowerLaw, SquareWell, Tabulated, Zero, sample_potential
from .spectral import assemble, count_below, negative_moment, spectrum_below

__version__ = "0.1.0"

__all__ = [
    "Grid", "build_grid", "box_partition",
    "Zero", "SquareWell", "PowerLaw", "Tabulated", "sample_potential",
    "assemble", "count_below", "spectrum_below", "negative_moment",
    "LandscapeField", "solve_landscape", "effective_potential", "harnack_constants",
    "SquareWellClosedForm", "squarewell_E0", "squarewell_landscape", "hydrogen_count",
]
