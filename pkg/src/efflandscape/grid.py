"""Uniform truncated grids, measurement windows and aligned box partitions.

The whole line is replaced by ``[-L, L]`` with Dirichlet conditions at the
two end points; only the interior nodes carry unknowns.  Statistics are read
off on a window ``[-W, W]`` kept away from the boundary layer.

Box extrema are those of the piecewise-linear interpolant of the nodal
values, i.e. the extremum over the nodes strictly inside the cell together
with the interpolated values at the two cell faces.  With that rule the
extremum over a cell equals the extremum over its sub-cells, which is what
the refinement arguments need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import GridError

_REL_TOL = 1e-9


def _as_integer(ratio, what):
    k = round(ratio)
    if abs(ratio - k) > _REL_TOL * max(1.0, abs(ratio)):
        raise GridError(f"{what} must be an integer, got {ratio!r}")
    return int(k)


@dataclass(frozen=True)
class Grid:
    """Interior nodes of ``[-L, L]`` with spacing ``h`` and window half-width ``W``."""

    d: int
    L: float
    h: float
    W: float
    nodes: np.ndarray = field(repr=False)

    @property
    def n(self):
        return self.nodes.size

    @property
    def weights(self):
        """Nodal quadrature weights (rectangle rule)."""
        return np.full(self.n, self.h)

    @property
    def window_mask(self):
        return np.abs(self.nodes) <= self.W * (1 + _REL_TOL)

    @property
    def window_nodes(self):
        return self.nodes[self.window_mask]

    @property
    def window_bounds(self):
        return -self.W, self.W

    @property
    def window_volume(self):
        return 2.0 * self.W

    def boundary_margin(self, M):
        """Distance from the window edge to the Dirichlet wall, in units of the decay length 1/sqrt(M)."""
        if M <= 0:
            return 0.0
        return (self.L - self.W) * math.sqrt(M)

    def margin_ok(self, M, decay_lengths=10.0):
        return self.boundary_margin(M) >= decay_lengths


def build_grid(d, L, h, W):
    """Build the truncated 1D grid.

    Nodes are ``x_j = -L + j h`` for ``j = 1 .. 2L/h - 1``; they are generated
    as integer multiples of ``h/2`` so that the origin is hit exactly when it
    is a node.
    """
    if d != 1:
        raise GridError("only d=1 Cartesian grids are supported; use radial3d for d=3")
    if not (h > 0):
        raise GridError(f"spacing must be positive, got h={h!r}")
    if not (L > 0):
        raise GridError(f"half-width must be positive, got L={L!r}")
    if h >= 2 * L:
        raise GridError(f"spacing h={h} leaves no interior node in [-{L}, {L}]")
    n_cells = _as_integer(2 * L / h, "2L/h")
    if not (0 < W <= L * (1 + _REL_TOL)):
        raise GridError(f"window half-width must satisfy 0 < W <= L, got W={W}, L={L}")
    j = np.arange(1, n_cells)
    nodes = (2 * j - n_cells) * (h / 2.0)
    return Grid(d=1, L=float(L), h=float(h), W=float(W), nodes=nodes)


@dataclass(frozen=True)
class BoxPartition:
    """Cells ``[k l, (k+1) l]`` lying fully inside the window."""

    side: float
    lower: np.ndarray
    # nodes in the closed cell: first index and one-past-last
    node_start: np.ndarray = field(repr=False)
    node_stop: np.ndarray = field(repr=False)

    @property
    def upper(self):
        return self.lower + self.side

    @property
    def count(self):
        return self.lower.size

    @property
    def cells(self):
        return [(float(a), float(a + self.side)) for a in self.lower]

    @property
    def covered_volume(self):
        return self.count * self.side


def aligned_range(a, b, side):
    """Integers k with ``[k side, (k+1) side]`` inside ``[a, b]``."""
    lo = a / side
    hi = b / side
    k_lo = round(lo) if abs(lo - round(lo)) <= _REL_TOL * max(1.0, abs(lo)) else math.ceil(lo)
    k_hi = round(hi) if abs(hi - round(hi)) <= _REL_TOL * max(1.0, abs(hi)) else math.floor(hi)
    return int(k_lo), int(k_hi) - 1


def box_partition(grid, side):
    if side < grid.h * (1 - _REL_TOL):
        raise GridError(f"cell side {side} is below the grid spacing {grid.h}")
    a, b = grid.window_bounds
    if side > (b - a) * (1 + _REL_TOL):
        raise GridError(f"cell side {side} exceeds the window width {b - a}")
    k_lo, k_hi = aligned_range(a, b, side)
    ks = np.arange(k_lo, k_hi + 1)
    lower = ks * side
    tol = _REL_TOL * grid.h
    start = np.searchsorted(grid.nodes, lower - tol, side="left")
    stop = np.searchsorted(grid.nodes, lower + side + tol, side="right")
    return BoxPartition(side=float(side), lower=lower, node_start=start, node_stop=stop)


def cell_extrema(grid, values, partition):
    """Min and max over each cell of the piecewise-linear interpolant of ``values``."""
    x = grid.nodes
    lo = partition.lower
    hi = partition.upper
    if partition.count == 0:
        empty = np.empty(0)
        return empty, empty
    v_lo = np.interp(lo, x, values)
    v_hi = np.interp(hi, x, values)
    tol = _REL_TOL * grid.h
    # strictly interior nodes
    start = np.searchsorted(x, lo + tol, side="left")
    stop = np.searchsorted(x, hi - tol, side="right")
    mins = np.minimum(v_lo, v_hi)
    maxs = np.maximum(v_lo, v_hi)
    has = stop > start
    if np.any(has):
        padded = np.append(values, values[-1])
        idx = np.ravel(np.column_stack([start[has], stop[has]]))
        seg_min = np.minimum.reduceat(padded, idx)[::2]
        seg_max = np.maximum.reduceat(padded, idx)[::2]
        mins[has] = np.minimum(mins[has], seg_min)
        maxs[has] = np.maximum(maxs[has], seg_max)
    return mins, maxs


def window_extrema(grid, values):
    """Min and max of the interpolant over the whole window."""
    a, b = grid.window_bounds
    inside = grid.window_mask
    ends = np.interp([a, b], grid.nodes, values)
    vals = np.concatenate([values[inside], ends])
    return float(vals.min()), float(vals.max())


def linear_superlevel_measure(x, values, a, b, threshold):
    """Measure of ``{t in [a, b] : v(t) >= threshold}`` for the linear interpolant ``v``."""
    tol = _REL_TOL * (x[1] - x[0]) if x.size > 1 else 0.0
    i0 = np.searchsorted(x, a + tol, side="left")
    i1 = np.searchsorted(x, b - tol, side="right")
    t = np.concatenate([[a], x[i0:i1], [b]])
    v = np.concatenate([[np.interp(a, x, values)], values[i0:i1], [np.interp(b, x, values)]])
    t0, t1 = t[:-1], t[1:]
    v0, v1 = v[:-1], v[1:]
    length = t1 - t0
    above0 = v0 >= threshold
    above1 = v1 >= threshold
    frac = np.where(above0 & above1, 1.0, 0.0)
    mixed = above0 != above1
    if np.any(mixed):
        dv = v1[mixed] - v0[mixed]
        cross = (threshold - v0[mixed]) / dv
        frac_m = np.where(above0[mixed], cross, 1.0 - cross)
        frac[mixed] = np.clip(frac_m, 0.0, 1.0)
    return float(np.sum(frac * length))


def dyadic_scales(grid):
    """Cell sides ``h 2^k`` up to the window width."""
    a, b = grid.window_bounds
    out = []
    s = grid.h
    while s <= (b - a) * (1 + _REL_TOL):
        out.append(s)
        s *= 2.0
    return out
