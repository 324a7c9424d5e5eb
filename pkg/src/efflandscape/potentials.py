"""Potential families, grid sampling and Kato-norm diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np
from scipy import integrate, optimize

from .exceptions import PotentialError

_SNAP = 1e-9


class PotentialSpec:
    """Base class; concrete families implement ``radial_profile``."""

    kind: ClassVar[str] = ""
    radial: ClassVar[bool] = True

    def radial_profile(self, r):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError

    @staticmethod
    def from_dict(data):
        data = dict(data)
        kind = data.pop("kind", None)
        try:
            cls = _KINDS[kind]
        except KeyError:
            raise PotentialError(f"unknown potential kind {kind!r}") from None
        try:
            return cls(**data)
        except TypeError as exc:
            raise PotentialError(f"bad parameters for {kind!r}: {exc}") from None


@dataclass(frozen=True)
class Zero(PotentialSpec):
    kind: ClassVar[str] = "zero"

    def radial_profile(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class SquareWell(PotentialSpec):
    """``V = -depth`` on the open ball of radius ``half_width`` around ``center``.

    A point sitting exactly on the edge gets the mean of the two one-sided
    values, ``-depth/2``.  Off the edge this is plain pointwise evaluation;
    on it, the three-point stencil stays second-order accurate instead of
    dropping to first order.
    """

    depth: float
    half_width: float
    center: float = 0.0
    kind: ClassVar[str] = "square_well"

    def __post_init__(self):
        if not (self.depth > 0 and self.half_width > 0):
            raise PotentialError("square well needs depth > 0 and half_width > 0")

    @property
    def radial(self):
        return self.center == 0.0

    def radial_profile(self, r):
        r = np.asarray(r, dtype=float)
        edge = np.abs(r - self.half_width) <= self.half_width * _SNAP
        inside = r < self.half_width
        return np.where(edge, -0.5 * self.depth, np.where(inside, -self.depth, 0.0))

    def to_dict(self):
        out = {"kind": self.kind, "depth": self.depth, "half_width": self.half_width}
        if self.center:
            out["center"] = self.center
        return out


@dataclass(frozen=True)
class PowerLaw(PotentialSpec):
    """Attractive singular power law ``V = -|x|^(-exponent)``."""

    exponent: float
    kind: ClassVar[str] = "power_law"

    def __post_init__(self):
        if not self.exponent > 0:
            raise PotentialError("power-law exponent must be positive")

    def check_dimension(self, d):
        rho_d = min(d, 2)
        if not self.exponent < rho_d:
            raise PotentialError(
                f"exponent {self.exponent} is not below min(d, 2) = {rho_d}; potential is outside the Kato class"
            )

    def radial_profile(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r == 0):
            raise PotentialError("power-law potential is singular at the origin")
        return -np.power(r, -self.exponent)

    def to_dict(self):
        return {"kind": self.kind, "exponent": self.exponent}


@dataclass(frozen=True)
class Tabulated(PotentialSpec):
    """Samples on the nodes of a specific grid (``nodes`` optional, needed for Kato norms)."""

    samples: tuple
    nodes: tuple | None = None
    kind: ClassVar[str] = "tabulated"
    radial: ClassVar[bool] = True

    def __init__(self, samples, nodes=None):
        object.__setattr__(self, "samples", tuple(float(v) for v in np.ravel(samples)))
        object.__setattr__(self, "nodes", None if nodes is None else tuple(float(v) for v in np.ravel(nodes)))
        if self.nodes is not None and len(self.nodes) != len(self.samples):
            raise PotentialError("tabulated nodes and samples differ in length")

    @property
    def values(self):
        return np.asarray(self.samples)

    def radial_profile(self, r):
        raise PotentialError("tabulated potentials have no analytic profile; sample them on their own grid")

    def to_dict(self):
        out = {"kind": self.kind, "samples": list(self.samples)}
        if self.nodes is not None:
            out["nodes"] = list(self.nodes)
        return out


_KINDS = {cls.kind: cls for cls in (Zero, SquareWell, PowerLaw, Tabulated)}


@dataclass(frozen=True)
class PotentialField:
    grid: object
    values: np.ndarray = field(repr=False)


def evaluate(spec, x):
    """Pointwise evaluation at 1D positions ``x`` (not for tabulated specs)."""
    x = np.asarray(x, dtype=float)
    if isinstance(spec, SquareWell):
        return spec.radial_profile(np.abs(x - spec.center))
    return spec.radial_profile(np.abs(x))


def sample_potential(spec, grid):
    """Sample ``spec`` on the nodes of a 1D ``Grid`` or a ``RadialGrid``."""
    nodes = grid.nodes
    if isinstance(spec, Tabulated):
        if len(spec.samples) != nodes.size:
            raise PotentialError(f"tabulated potential has {len(spec.samples)} samples, grid has {nodes.size} nodes")
        values = spec.values.copy()
    else:
        d = getattr(grid, "d", 1)
        if isinstance(spec, PowerLaw):
            spec.check_dimension(d)
            if np.any(np.abs(nodes) <= _SNAP * grid.h):
                raise PotentialError("a grid node sits on the power-law singularity; shift the grid")
        if d == 3 and not spec.radial:
            raise PotentialError("radial grids need a radial potential")
        values = evaluate(spec, nodes)
    if not np.all(np.isfinite(values)):
        raise PotentialError("potential is not finite at every node")
    return PotentialField(grid=grid, values=values)


# Kato norms ---------------------------------------------------------------


@dataclass(frozen=True)
class KatoEstimate:
    value: float
    center: float
    tolerance: float


def _radial_primitive(spec):
    """``F(r) = int_0^r |V(t)| t dt`` for the radial families."""
    if isinstance(spec, Zero):
        return lambda r: 0.0 * r
    if isinstance(spec, SquareWell):
        eps, delta = spec.depth, spec.half_width
        return lambda r: 0.5 * eps * np.minimum(r, delta) ** 2
    if isinstance(spec, PowerLaw):
        rho = spec.exponent
        return lambda r: np.power(r, 2.0 - rho) / (2.0 - rho)
    raise PotentialError(f"no radial primitive for {spec.kind}")


def _kato_3d_at(spec, a):
    """``int_{B(x,1)} |x-y|^-1 |V(y)| dy`` for a radial V and ``|x| = a``."""
    if isinstance(spec, PowerLaw):
        vabs = lambda s: np.power(s, -spec.exponent)
    else:
        vabs = lambda s: -spec.radial_profile(s)
    if a == 0.0:
        val, err = integrate.quad(lambda s: s * vabs(s), 0.0, 1.0, limit=200)
        return 4 * math.pi * val, 4 * math.pi * err
    F = _radial_primitive(spec)
    inner = lambda s: F(a + s) - F(abs(a - s))
    points = [p for p in (a, getattr(spec, "half_width", None)) if p is not None and 0 < p < 1]
    val, err = integrate.quad(inner, 0.0, 1.0, points=points or None, limit=200)
    return 2 * math.pi / a * val, 2 * math.pi / a * err


def _kato_1d_at(spec, x):
    if isinstance(spec, Tabulated):
        if spec.nodes is None:
            raise PotentialError("tabulated Kato norm needs node positions")
        nodes = np.asarray(spec.nodes)
        vals = np.abs(spec.values)
        grid = np.linspace(x - 1, x + 1, 4001)
        f = np.interp(grid, nodes, vals, left=0.0, right=0.0)
        return float(integrate.trapezoid(f, grid)), (grid[1] - grid[0]) * float(vals.max(initial=0.0))
    if isinstance(spec, PowerLaw):
        rho = spec.exponent
        G = lambda t: math.copysign(abs(t) ** (1 - rho) / (1 - rho), t)
        return G(x + 1) - G(x - 1), 0.0
    if isinstance(spec, SquareWell):
        lo = max(x - 1, spec.center - spec.half_width)
        hi = min(x + 1, spec.center + spec.half_width)
        return spec.depth * max(0.0, hi - lo), 0.0
    return 0.0, 0.0


def kato_norm_estimate(spec, d, n_centers=41, span=None):
    """Numerical Kato norm: local kernel integral maximised over centers.

    The centers are scanned on a coarse lattice and the best one is refined
    by a bounded scalar search.  The returned tolerance is the larger of the
    quadrature error and the change produced by the refinement.
    """
    if d == 1:
        if isinstance(spec, PowerLaw):
            spec.check_dimension(1)
        at = lambda c: _kato_1d_at(spec, c)
        if span is None:
            if isinstance(spec, SquareWell):
                span = (spec.center - spec.half_width - 1, spec.center + spec.half_width + 1)
            elif isinstance(spec, Tabulated) and spec.nodes is not None:
                span = (min(spec.nodes) - 1, max(spec.nodes) + 1)
            else:
                span = (-2.0, 2.0)
    elif d == 3:
        if isinstance(spec, PowerLaw):
            spec.check_dimension(3)
        if not spec.radial or isinstance(spec, Tabulated):
            raise PotentialError("d=3 Kato norms are implemented for the analytic radial families only")
        at = lambda a: _kato_3d_at(spec, abs(a))
        if span is None:
            span = (0.0, getattr(spec, "half_width", 1.0) + 1.0)
    else:
        raise PotentialError("Kato norms are provided for d=1 and d=3")

    centers = np.linspace(span[0], span[1], n_centers)
    scan = [at(float(c)) for c in centers]
    vals = np.array([v for v, _ in scan])
    errs = np.array([e for _, e in scan])
    k = int(np.argmax(vals))
    best, best_c = float(vals[k]), float(centers[k])
    step = centers[1] - centers[0] if n_centers > 1 else 0.0
    refined = best
    if step > 0:
        lo, hi = max(span[0], best_c - step), min(span[1], best_c + step)
        res = optimize.minimize_scalar(lambda c: -at(float(c))[0], bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-8})
        if -res.fun > best:
            refined, best_c = float(-res.fun), float(res.x)
    tol = max(float(errs.max(initial=0.0)), abs(refined - best))
    return KatoEstimate(value=refined, center=best_c, tolerance=tol)
