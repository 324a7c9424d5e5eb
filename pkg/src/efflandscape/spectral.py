"""Discrete Schrödinger operators, inertia counting and eigenvalue moments.

All operators handled here are symmetric tridiagonal: the 1D three-point
Laplacian and the radial operators of ``radial3d``.  Eigenvalues are counted
with the ≤ convention from the signs of the LDLᵀ pivots of ``H - mu I``.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .exceptions import PotentialError

PROVENANCES = ("inertia", "box-N", "box-n", "box-n_c", "sublevel-volume-scaled", "analytic")


@dataclass(frozen=True)
class DiscreteOperator:
    """Symmetric tridiagonal ``-Δ_h + V + M`` on a grid."""

    grid: object
    diag: np.ndarray = field(repr=False)
    off: np.ndarray = field(repr=False)
    M: float = 0.0

    @property
    def n(self):
        return self.diag.size

    def gershgorin(self):
        a = np.abs(self.off)
        radius = np.zeros(self.n)
        radius[:-1] += a
        radius[1:] += a
        return float(np.min(self.diag - radius)), float(np.max(self.diag + radius))

    def norm_inf(self):
        lo, hi = self.gershgorin()
        return max(abs(lo), abs(hi))

    def shifted(self, c):
        """Operator plus ``c`` times the identity."""
        return DiscreteOperator(self.grid, self.diag + c, self.off, self.M + c)

    def matvec(self, v):
        out = self.diag * v
        out[:-1] += self.off * v[1:]
        out[1:] += self.off * v[:-1]
        return out

    def to_dense(self):
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)


def assemble(V, M):
    """Three-point stencil for ``-d²/dx² + V + M`` with Dirichlet walls."""
    grid = V.grid
    if V.values.shape != grid.nodes.shape:
        raise PotentialError("potential samples do not match the grid")
    h2 = grid.h * grid.h
    diag = 2.0 / h2 + V.values + M
    off = np.full(grid.n - 1, -1.0 / h2)
    return DiscreteOperator(grid=grid, diag=diag, off=off, M=float(M))


@numba.njit(cache=True, nogil=True)
def _negative_pivots(diag, off2, mu):
    # returns -1 on an exact zero pivot
    n = diag.size
    count = 0
    d = diag[0] - mu
    if d == 0.0:
        return -1
    if d < 0.0:
        count += 1
    for i in range(1, n):
        d = (diag[i] - mu) - off2[i - 1] / d
        if d == 0.0:
            return -1
        if d < 0.0:
            count += 1
    return count


def count_below(op, mu):
    """Number of eigenvalues ``<= mu`` (exact for the discrete operator)."""
    off2 = op.off * op.off
    mu = float(mu)
    c = _negative_pivots(op.diag, off2, mu)
    if c >= 0:
        return int(c)
    nudge = max(4 * math.ulp(mu) if mu else 4 * np.finfo(float).tiny, 4 * np.finfo(float).eps * op.norm_inf())
    while True:
        mu = mu + nudge
        c = _negative_pivots(op.diag, off2, mu)
        if c >= 0:
            return int(c)
        nudge *= 2


def count_many(op, mus, threads=1):
    mus = [float(m) for m in mus]
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda m: count_below(op, m), mus))
    return [count_below(op, m) for m in mus]


def spectrum_below(op, mu, tol):
    """All eigenvalues ``<= mu``, each bracketed to width ``tol`` by bisection."""
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    k_total = count_below(op, mu)
    if k_total == 0:
        return np.empty(0)
    lo0, _ = op.gershgorin()
    lo0 = min(lo0, mu) - 1.0
    hi0 = float(mu)
    eigs = np.empty(k_total)
    # brackets: lower[k] has count < k+1, upper[k] has count >= k+1
    lower = np.full(k_total, lo0)
    upper = np.full(k_total, hi0)
    for k in range(k_total):
        lo, hi = lower[k], upper[k]
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            c = count_below(op, mid)
            # every probe tightens the brackets of the later eigenvalues too
            upper[k:c] = np.minimum(upper[k:c], mid)
            lower[c:] = np.maximum(lower[c:], mid)
            if c >= k + 1:
                hi = mid
            else:
                lo = mid
        eigs[k] = 0.5 * (lo + hi)
    return eigs


@dataclass
class CountingCurve:
    mu: np.ndarray
    count: np.ndarray
    provenance: str

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        self.mu = np.asarray(self.mu, dtype=float)
        # the scaled sublevel volume is the one real-valued curve
        kind = float if self.provenance == "sublevel-volume-scaled" else int
        self.count = np.asarray(self.count, dtype=kind)
        if np.any(self.count < 0):
            raise ValueError("counts must be nonnegative")
        if self.mu.shape != self.count.shape:
            raise ValueError("mu and count differ in length")
        if np.any(np.diff(self.mu) < 0):
            raise ValueError("mu grid must be sorted")

    def rows(self):
        cast = float if self.count.dtype.kind == "f" else int
        return [(float(m), cast(c), self.provenance) for m, c in zip(self.mu, self.count)]

    @classmethod
    def from_eigenvalues(cls, eigs):
        """Exact step function: jump points at the distinct eigenvalues."""
        eigs = np.sort(np.asarray(eigs, dtype=float))
        mu = np.unique(eigs)
        counts = np.searchsorted(eigs, mu, side="right")
        return cls(mu, counts, "analytic")


def counting_curve(op, mus, threads=1):
    return CountingCurve(np.asarray(mus, dtype=float), count_many(op, mus, threads), "inertia")


def write_curves_csv(path, curves):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mu", "count", "provenance"])
        for curve in curves:
            for m, c, p in curve.rows():
                w.writerow([format(m, ".17g"), c if isinstance(c, int) else format(c, ".17g"), p])


def negative_moment(source, gamma, mode="sum"):
    """``tr(H_-^gamma)`` from eigenvalues (``sum``) or the layer-cake integral (``integral``).

    ``source`` is an eigenvalue array or a ``CountingCurve``.  A curve is read
    as a right-continuous step function that jumps only at its grid points.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if isinstance(source, CountingCurve):
        curve = source
        if mode == "sum":
            jumps = np.diff(np.concatenate([[0], curve.count]))
            neg = curve.mu < 0
            return float(np.sum(jumps[neg] * np.abs(curve.mu[neg]) ** gamma))
    else:
        eigs = np.asarray(source, dtype=float)
        if mode == "sum":
            neg = eigs[eigs < 0]
            return float(np.sum(np.abs(neg) ** gamma))
        curve = CountingCurve.from_eigenvalues(eigs) if eigs.size else CountingCurve([], [], "analytic")
    if mode != "integral":
        raise ValueError(f"unknown mode {mode!r}")
    neg = curve.mu < 0
    mu = curve.mu[neg]
    cnt = curve.count[neg]
    if mu.size == 0:
        return 0.0
    # N(-lam) = cnt[i] for lam in [|mu[i+1]|, |mu[i]|), and cnt[-1] down to lam = 0
    lam_hi = np.abs(mu)
    lam_lo = np.append(np.abs(mu[1:]), 0.0)
    return float(np.sum(cnt * (lam_hi**gamma - lam_lo**gamma)))
