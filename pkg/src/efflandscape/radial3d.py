"""Radial reduction in three dimensions.

For a radial potential the operator splits into angular-momentum sectors
``-w'' + (l(l+1)/r² + V + M) w`` acting on ``w = r u`` with ``w(0) = 0``.
Each sector is a tridiagonal problem on the nodes ``r_j = j h``, so the
inertia machinery of :mod:`spectral` applies unchanged.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analytic
from .exceptions import GridError, PotentialError, SolverError
from .landscape import RESIDUAL_TOL, LandscapeField, backward_error, require_positive_definite, solve_tridiagonal_spd
from .potentials import PotentialField, PotentialSpec, PowerLaw, sample_potential
from .spectral import DiscreteOperator, count_below

_REL_TOL = 1e-9
# consecutive empty sectors before the l-sum stops
EMPTY_SECTORS = 2


@dataclass(frozen=True)
class RadialGrid:
    """Nodes ``j h`` for ``j = 1 .. R/h - 1``; statistics read on ``r <= W``."""

    h: float
    R: float
    W: float
    nodes: np.ndarray = field(repr=False)
    d: int = 3

    @property
    def n(self):
        return self.nodes.size

    @property
    def weights(self):
        """Shell volumes ``4 pi r² h``."""
        return 4.0 * math.pi * self.nodes**2 * self.h

    @property
    def window_mask(self):
        return self.nodes <= self.W * (1 + _REL_TOL)

    @property
    def window_nodes(self):
        return self.nodes[self.window_mask]

    @property
    def window_bounds(self):
        return 0.0, self.W

    @property
    def window_volume(self):
        return 4.0 * math.pi * self.W**3 / 3.0


def build_radial_grid(h, R, W=None):
    if not h > 0:
        raise GridError(f"spacing must be positive, got h={h!r}")
    if not R > h:
        raise GridError(f"radius R={R} leaves no interior node")
    ratio = R / h
    m = round(ratio)
    if abs(ratio - m) > _REL_TOL * ratio:
        raise GridError(f"R/h must be an integer, got {ratio!r}")
    W = R if W is None else W
    if not 0 < W <= R * (1 + _REL_TOL):
        raise GridError(f"window radius must satisfy 0 < W <= R, got W={W}, R={R}")
    nodes = np.arange(1, m) * float(h)
    return RadialGrid(h=float(h), R=float(R), W=float(W), nodes=nodes)


def _potential_values(source, grid):
    if isinstance(source, PotentialSpec):
        if not source.radial:
            raise PotentialError("radial reduction needs a radial potential")
        return sample_potential(source, grid).values
    if isinstance(source, PotentialField):
        values = source.values
    else:
        values = np.asarray(source, dtype=float)
    if values.shape != grid.nodes.shape:
        raise PotentialError("potential samples do not match the radial grid")
    return values


def radial_operator(source, ell, M, grid):
    """Sector ``ell`` of ``-Δ + V + M`` in the ``w = r u`` variable."""
    V = _potential_values(source, grid)
    r = grid.nodes
    h2 = grid.h * grid.h
    diag = 2.0 / h2 + ell * (ell + 1) / (r * r) + V + M
    off = np.full(grid.n - 1, -1.0 / h2)
    return DiscreteOperator(grid=grid, diag=diag, off=off, M=float(M))


@dataclass(frozen=True)
class SectorCount:
    total: int
    sectors: tuple  # (ell, count) for every sector visited


def radial_sector_counts(source, mu, grid, M=0.0, max_ell=None, empty_sectors=EMPTY_SECTORS):
    """``sum_l (2l+1) N_l(mu)`` with the per-sector counts."""
    mu = float(mu)
    if not mu < 0:
        raise ValueError("radial counts are only finite for mu < 0")
    V = _potential_values(source, grid)
    total, zeros, ell, sectors = 0, 0, 0, []
    while zeros < empty_sectors and (max_ell is None or ell <= max_ell):
        c = count_below(radial_operator(V, ell, M, grid), mu)
        sectors.append((ell, c))
        total += (2 * ell + 1) * c
        zeros = zeros + 1 if c == 0 else 0
        ell += 1
    return SectorCount(total=total, sectors=tuple(sectors))


def radial_count(source, mu, grid, M=0.0, **kw):
    """Eigenvalues ``<= mu`` of the 3D operator, with multiplicity."""
    return radial_sector_counts(source, mu, grid, M=M, **kw).total


def radial_counts(source, mus, grid, M=0.0, threads=1):
    V = _potential_values(source, grid)
    job = lambda m: radial_count(V, m, grid, M=M)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(job, mus))
    return [job(m) for m in mus]


def radial_landscape(source, M, grid):
    """Solve ``-w'' + (V+M) w = r`` and return ``u = w / r``."""
    op = radial_operator(source, 0, M, grid)
    require_positive_definite(op)
    r = grid.nodes
    w, res = solve_tridiagonal_spd(op, r.copy())
    if res > RESIDUAL_TOL:
        raise SolverError(f"backward error {res:.3e} exceeds {RESIDUAL_TOL:.0e}")
    if not np.all(w > 0):
        raise SolverError(f"radial landscape is not positive at {int(np.sum(w <= 0))} node(s)")
    return LandscapeField(grid=grid, u=w / r, M=float(M), residual=res)


def radial_residual(field_, source):
    op = radial_operator(source, 0, field_.M, field_.grid)
    r = field_.grid.nodes
    return backward_error(op, field_.u * r, r)


def radial_semiclassical(W, mu, grid, power=1.5, weyl=False):
    """``4 pi int (mu - W)_+^p r² dr`` over the window by the trapezoid rule."""
    mask = grid.window_mask
    r = np.concatenate([[0.0], grid.nodes[mask]])
    f = np.maximum(mu - np.asarray(W)[mask], 0.0) ** power * grid.nodes[mask] ** 2
    f = np.concatenate([[0.0], f])
    value = 4.0 * math.pi * float(np.trapezoid(f, r))
    if weyl:
        value *= weyl_prefactor(3)
    return value


def weyl_prefactor(d):
    return 1.0 / ((2.0 * math.sqrt(math.pi)) ** d * math.gamma(d / 2.0 + 1.0))


def _is_hydrogen(spec):
    return isinstance(spec, PowerLaw) and spec.exponent == 1.0


@dataclass
class AsymptoticsRow:
    mu: float
    count_exact: int
    semiclassical: float
    count_substituted: int | None
    ratio_b: float | None
    ratio_c: float | None


def asymptotics_ratio(spec, M, mus, landscape_grid, count_grid=None, exact="auto", substituted=True, threads=1):
    """Counting function against the two landscape-based predictions.

    ``exact`` chooses column (a): ``"oracle"`` uses the hydrogen level formula,
    ``"numeric"`` the radial count on ``count_grid``; ``"auto"`` picks the
    oracle for ``-1/r``.  Ratios with a zero denominator are reported as None.
    """
    mus = [float(m) for m in mus]
    if any(not m < 0 for m in mus):
        raise ValueError("asymptotics need strictly negative mu")
    if exact == "auto":
        exact = "oracle" if _is_hydrogen(spec) else "numeric"
    if exact == "oracle" and not _is_hydrogen(spec):
        raise ValueError("the oracle count exists only for the hydrogen potential")
    field_ = radial_landscape(spec, M, landscape_grid)
    W = field_.W
    if exact == "oracle":
        a = [analytic.hydrogen_count(m) for m in mus]
    else:
        a = radial_counts(spec, mus, count_grid or landscape_grid, threads=threads)
    b = [radial_semiclassical(W, m, landscape_grid, 1.5, weyl=True) for m in mus]
    c = radial_counts(W, mus, landscape_grid, threads=threads) if substituted else [None] * len(mus)
    rows = []
    for m, ai, bi, ci in zip(mus, a, b, c):
        rb = ai / bi if bi > 0 else None
        rc = ai / ci if ci else None
        rows.append(AsymptoticsRow(m, int(ai), bi, ci, rb, rc))
    return rows, field_


def _fmt(v):
    if v is None:
        return "NA"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_asymptotics_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mu", "count_exact", "semiclassical", "count_substituted", "ratio_b", "ratio_c"])
        for row in rows:
            w.writerow([_fmt(row.mu), _fmt(row.count_exact), _fmt(row.semiclassical),
                        _fmt(row.count_substituted), _fmt(row.ratio_b), _fmt(row.ratio_c)])


def decay_exponent(field_, r_min=10.0, r_max=100.0):
    """Least-squares slope of ``-log|W + 1/r|`` against ``log r`` on ``[r_min, r_max]``."""
    r = field_.grid.nodes
    sel = (r >= r_min) & (r <= r_max)
    dev = np.abs(field_.W[sel] + 1.0 / r[sel])
    if np.any(dev == 0):
        raise ValueError("deviation vanishes at a node; the log fit is undefined")
    slope, _ = np.polyfit(np.log(r[sel]), np.log(dev), 1)
    return float(-slope)
