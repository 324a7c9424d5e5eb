"""Ground-state lower bound and the monotone shift iteration ``M -> M - inf 1/u_M``."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .exceptions import IndefiniteOperatorError, IterationError
from .landscape import solve_landscape
from .potentials import sample_potential
from .spectral import assemble


def groundstate_lower_bound(field_):
    """``min (1/u - M)`` over the window nodes; never above the ground-state energy."""
    return float(np.min(field_.window_values(field_.W)))


def landscape_solver(spec, grid):
    """``M -> LandscapeField`` for a 1D grid or a radial grid."""
    if getattr(grid, "d", 1) == 3:
        from .radial3d import radial_landscape

        return lambda M: radial_landscape(spec, M, grid)
    V = sample_potential(spec, grid)
    return lambda M: solve_landscape(assemble(V, M))


@dataclass
class IterationTrace:
    M: list = field(default_factory=list)
    inf_inv_u: list = field(default_factory=list)
    max_u: list = field(default_factory=list)
    converged: bool = False
    reason: str = ""

    @property
    def steps(self):
        return len(self.inf_inv_u)

    @property
    def final_M(self):
        return self.M[-1]

    @property
    def E0_estimate(self):
        return -self.final_M if self.final_M != 0 else 0.0

    def rows(self):
        """``(step, M_n, inf 1/u_{M_n}, max u_{M_n})``; the last shift has no landscape of its own."""
        out = []
        for k, M in enumerate(self.M):
            if k < self.steps:
                out.append((k, M, self.inf_inv_u[k], self.max_u[k]))
            else:
                out.append((k, M, None, None))
        return out

    def to_dict(self):
        return {
            "M": list(self.M),
            "inf_inv_u": list(self.inf_inv_u),
            "max_u": list(self.max_u),
            "converged": self.converged,
            "reason": self.reason,
            "E0_estimate": self.E0_estimate,
            "steps": self.steps,
        }

    def write_csv(self, path):
        fmt = lambda v: "NA" if v is None else format(float(v), ".17g")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "M", "inf_inv_u", "max_u"])
            for step, M, a, b in self.rows():
                w.writerow([step, fmt(M), fmt(a), fmt(b)])


def iterate_M(spec, grid, M0, tol, max_steps=200):
    """Run ``M_{n+1} = M_n - min 1/u_{M_n}`` from ``M0``.

    Each landscape solve first certifies ``M_n`` by an inertia count.  The
    minimum is taken over every node of the truncated domain, which keeps
    each new shift admissible for the discrete operator.  A shift that
    reaches 0 is clipped there and ends the run: for a decaying potential
    the spectrum reaches 0, so ``-E0 >= 0`` and no smaller shift can be
    admissible.
    """
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    solve = landscape_solver(spec, grid)
    trace = IterationTrace(M=[float(M0)])
    M = float(M0)
    for _ in range(max_steps):
        try:
            f = solve(M)
        except IndefiniteOperatorError as exc:
            if trace.steps == 0:
                raise
            raise IterationError(f"shift M={M} lost positive definiteness at step {trace.steps}: {exc}") from exc
        inf_inv = float(np.min(1.0 / f.u))
        trace.inf_inv_u.append(inf_inv)
        trace.max_u.append(float(np.max(f.u)))
        M_next = M - inf_inv
        if not M_next < M:
            raise IterationError(f"non-decreasing step at M={M}: min 1/u = {inf_inv}")
        if M_next <= 0.0:
            trace.M.append(0.0)
            trace.converged, trace.reason = True, "boundary"
            return trace
        trace.M.append(M_next)
        M = M_next
        if inf_inv < tol:
            trace.converged, trace.reason = True, "tolerance"
            return trace
    trace.reason = "max_steps"
    return trace
