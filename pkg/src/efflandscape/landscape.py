"""Landscape solves, effective potential and Harnack-type diagnostics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solveh_banded

from . import grid as gridmod
from .exceptions import IndefiniteOperatorError, SolverError
from .spectral import count_below

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class LandscapeField:
    grid: object
    u: np.ndarray = field(repr=False)
    M: float
    residual: float

    @property
    def W(self):
        return effective_potential(self)

    @property
    def inv_u(self):
        return 1.0 / self.u

    def window_values(self, values=None):
        v = self.u if values is None else values
        return v[self.grid.window_mask]

    def to_csv(self, path):
        W = self.W
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "u", "W"])
            for x, u, e in zip(self.grid.nodes, self.u, W):
                w.writerow([format(x, ".17g"), format(u, ".17g"), format(e, ".17g")])


def backward_error(op, u, rhs):
    r = rhs - op.matvec(u)
    scale = op.norm_inf() * np.max(np.abs(u)) + np.max(np.abs(rhs))
    return float(np.max(np.abs(r)) / scale)


def solve_tridiagonal_spd(op, rhs):
    """Cholesky solve of the SPD tridiagonal system, one refinement step if needed."""
    ab = np.zeros((2, op.n))
    ab[0, 1:] = op.off
    ab[1] = op.diag
    try:
        x = solveh_banded(ab, rhs, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"Cholesky factorisation failed: {exc}") from None
    res = backward_error(op, x, rhs)
    if res > RESIDUAL_TOL:
        x = x + solveh_banded(ab, rhs - op.matvec(x), check_finite=False)
        res = backward_error(op, x, rhs)
    return x, res


def require_positive_definite(op):
    k = count_below(op, 0.0)
    if k:
        raise IndefiniteOperatorError(
            f"operator with shift M={op.M} has {k} eigenvalue(s) <= 0; need M > -E0", count=k
        )


def solve_landscape(op):
    """Solve ``H u = 1`` for a positive definite ``H``; ``u`` must come out positive."""
    require_positive_definite(op)
    u, res = solve_tridiagonal_spd(op, np.ones(op.n))
    if res > RESIDUAL_TOL:
        raise SolverError(f"backward error {res:.3e} exceeds {RESIDUAL_TOL:.0e}")
    if not np.all(u > 0):
        bad = int(np.sum(u <= 0))
        raise SolverError(f"landscape is not positive at {bad} node(s)")
    return LandscapeField(grid=op.grid, u=u, M=op.M, residual=res)


def effective_potential(field_):
    u = field_.u
    if not np.all(u > 0):
        raise SolverError("effective potential needs a positive landscape")
    return 1.0 / u - field_.M


def quadratic_form_split(op, u, phi):
    """Both sides of the ground-state representation of ``<phi, H phi>``.

    With ``g = phi/u`` the discrete identity reads
    ``<phi, H phi> = sum u_j u_{j+1} (g_{j+1}-g_j)^2 / h^2 + sum g^2 u (H u)``.
    Returns ``(lhs, rhs)``.
    """
    lhs = float(phi @ op.matvec(phi))
    g = phi / u
    grad = -op.off * u[:-1] * u[1:] * np.diff(g) ** 2
    rhs = float(np.sum(grad) + np.sum(g * g * u * op.matvec(u)))
    return lhs, rhs


# Harnack diagnostics ----------------------------------------------------------


@dataclass
class HarnackDiagnostics:
    C_HM: float
    C_HM_raw: float
    C_HM_scale: float
    C_HM_cell: tuple
    A_M: float
    scales: list
    C_tilde_H: float | None = None
    C_tilde_H_cell: tuple | None = None
    C_tilde_H_all: float | None = None
    C_tilde_H_all_cell: tuple | None = None
    c: float | None = None
    C_c: float | None = None

    def effective_C_tilde_H(self):
        """Constant to use in the sublevel bound, with its source."""
        if self.C_tilde_H is not None:
            return self.C_tilde_H, "qualifying-boxes"
        if self.C_tilde_H_all is not None:
            return self.C_tilde_H_all, "all-negative-boxes"
        return None, "absent"

    def to_dict(self):
        return {
            "C_HM": self.C_HM,
            "C_HM_raw": self.C_HM_raw,
            "C_HM_scale": self.C_HM_scale,
            "C_HM_cell": list(self.C_HM_cell),
            "A_M": self.A_M,
            "scales": [float(s) for s in self.scales],
            "C_tilde_H": self.C_tilde_H,
            "C_tilde_H_cell": None if self.C_tilde_H_cell is None else list(self.C_tilde_H_cell),
            "C_tilde_H_all": self.C_tilde_H_all,
            "C_tilde_H_all_cell": None if self.C_tilde_H_all_cell is None else list(self.C_tilde_H_all_cell),
            "c": self.c,
            "C_c": self.C_c,
        }


def global_harnack_ratio(field_):
    lo, hi = gridmod.window_extrema(field_.grid, field_.u)
    return hi / lo


def kato_box_constant(c, A_M, d):
    """``(c - 1) / (2^d (5 A_M)^2)``."""
    return (c - 1.0) / (2**d * (5.0 * A_M) ** 2)


def hm_ratio(field_, side):
    """Largest ``sup_Q u / (inf_Q u + side^2)`` over the window cells of that side."""
    part = gridmod.box_partition(field_.grid, side)
    if part.count == 0:
        return 0.0, None
    lo, hi = gridmod.cell_extrema(field_.grid, field_.u, part)
    ratio = hi / (lo + side * side)
    k = int(np.argmax(ratio))
    return float(ratio[k]), (float(part.lower[k]), float(part.upper[k]))


def _valid_scales(grid, scales):
    lo, hi = grid.h, 2 * grid.W
    return sorted({float(s) for s in scales if lo * (1 - 1e-9) <= s <= hi * (1 + 1e-9)})


def harnack_constants(field_, scales=None, c=2.0):
    """Harnack constants of the landscape measured on the window.

    ``C_HM`` is the largest ratio ``sup_Q u / (inf_Q u + l(Q)^2)`` over every
    window cell at every requested side, clipped below at 1.

    ``C_tilde_H`` is the largest constant with ``sup_Q W <= C inf_Q W`` on the
    cells where ``sup_Q W <= -c / (C_c l^2)``; for negative ``W`` that is the
    smallest ratio ``sup_Q W / inf_Q W``, a number in (0, 1].
    ``C_tilde_H_all`` is the same quantity over every cell with ``sup_Q W < 0``.
    """
    grid = field_.grid
    if scales is None:
        scales = gridmod.dyadic_scales(grid)
    scales = _valid_scales(grid, scales)
    if not scales:
        raise ValueError("no scale inside [h, 2W]")
    best, best_scale, best_cell = 0.0, scales[0], None
    for s in scales:
        r, cell = hm_ratio(field_, s)
        if cell is not None and r > best:
            best, best_scale, best_cell = r, s, cell
    A_M = global_harnack_ratio(field_)
    d = getattr(grid, "d", 1)
    C_c = kato_box_constant(c, A_M, d)
    diag = HarnackDiagnostics(
        C_HM=max(1.0, best), C_HM_raw=best, C_HM_scale=best_scale,
        C_HM_cell=best_cell or (math.nan, math.nan), A_M=A_M, scales=scales, c=c, C_c=C_c,
    )
    M = field_.M
    q_best = a_best = None
    for s in scales:
        part = gridmod.box_partition(grid, s)
        if part.count == 0:
            continue
        u_lo, u_hi = gridmod.cell_extrema(grid, field_.u, part)
        sup_W = 1.0 / u_lo - M
        inf_W = 1.0 / u_hi - M
        neg = sup_W < 0
        ratio = np.where(neg, sup_W / np.where(neg, inf_W, -1.0), np.inf)
        if np.any(neg):
            k = int(np.argmin(ratio))
            if a_best is None or ratio[k] < a_best[0]:
                a_best = (float(ratio[k]), (float(part.lower[k]), float(part.upper[k])))
        qual = sup_W <= -c / (C_c * s * s)
        if np.any(qual):
            rq = np.where(qual, ratio, np.inf)
            k = int(np.argmin(rq))
            if q_best is None or rq[k] < q_best[0]:
                q_best = (float(rq[k]), (float(part.lower[k]), float(part.upper[k])))
    if q_best is not None:
        diag.C_tilde_H, diag.C_tilde_H_cell = q_best
    if a_best is not None:
        diag.C_tilde_H_all, diag.C_tilde_H_all_cell = a_best
    return diag
