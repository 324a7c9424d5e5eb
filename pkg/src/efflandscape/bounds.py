"""Sublevel volumes, box counts and the inequality checks built on them.

Every check compares a left and a right value per spectral parameter (or
per exponent gamma) and records the margin ``right - left``.  A row whose
``ok`` is ``None`` is informational and never counts as a violation.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from . import grid as gridmod
from .exceptions import ConfigError, GridError
from .landscape import harnack_constants
from .spectral import count_below, spectrum_below

KINDS = ("comparison", "clr_sandwich", "kato_lower", "kato_sublevel_lower", "kato_clr_upper", "lt_two_sided")
_RTOL = 1e-12
# growth factor of the Harnack-Moser constant in the small-box refinement step
_HM_FACTOR = 2.0


# Volumes and box counts ---------------------------------------------------------


def sublevel_volume(field_, mu, *, values="inv_u", method="nodal", side=None):
    """Measure of ``{values <= mu}`` on the window.

    ``values`` is ``"inv_u"`` (``1/u``) or ``"W"`` (``1/u - M``).  The nodal
    method counts window nodes and multiplies by the cell volume (shell
    volumes on a radial grid).  The ``"linear"`` method is 1D only: the
    exact measure for the piecewise-linear interpolant of ``u``, restricted
    to the union of the aligned cells of side ``side`` (default
    ``mu^(-1/2)``).
    """
    grid = field_.grid
    shift = 0.0 if values == "inv_u" else field_.M
    if values not in ("inv_u", "W"):
        raise ValueError(f"unknown field {values!r}")
    if method == "nodal":
        f = 1.0 / field_.u - shift
        mask = grid.window_mask & (f <= mu)
        w = grid.weights
        return float(np.sum(w[mask]))
    if method != "linear":
        raise ValueError(f"unknown method {method!r}")
    if getattr(grid, "d", 1) != 1 or not hasattr(grid, "L"):
        raise ValueError("the linear method needs a 1D Cartesian grid")
    level = mu + shift  # 1/u <= level  <=>  u >= 1/level
    if level <= 0:
        return 0.0
    if side is None:
        side = level ** -0.5 if values == "inv_u" else None
    a, b = grid.window_bounds
    if side is not None:
        k_lo, k_hi = gridmod.aligned_range(a, b, side)
        if k_hi < k_lo:
            return 0.0
        a, b = k_lo * side, (k_hi + 1) * side
    return gridmod.linear_superlevel_measure(grid.nodes, field_.u, a, b, 1.0 / level)


def box_scale(mu, mode, C_c=None):
    if mode in ("N", "n"):
        if not mu > 0:
            raise ValueError(f"mode {mode} needs mu > 0")
        return mu**-0.5
    if mode == "n_c":
        if not mu < 0:
            raise ValueError("mode n_c needs mu < 0")
        if C_c is None or not C_c > 0:
            raise ValueError("mode n_c needs a positive C_c")
        return (C_c * abs(mu)) ** -0.5
    raise ValueError(f"unknown mode {mode!r}")


def box_counts(field_, mu, mode, c=2.0, C_c=None):
    """``N``, ``n`` or ``n_c`` at ``mu``; raises ``GridError`` for a side outside ``[h, 2W]``."""
    side = box_scale(mu, mode, C_c)
    part = gridmod.box_partition(field_.grid, side)
    if part.count == 0:
        return 0
    lo, hi = gridmod.cell_extrema(field_.grid, field_.u, part)
    if mode == "N":
        # inf 1/u <= mu
        return int(np.sum(1.0 / hi <= mu))
    if mode == "n":
        return int(np.sum(1.0 / lo <= mu))
    return int(np.sum(1.0 / lo - field_.M <= c * mu))


def semiclassical_integral(W, mu, power, grid=None, weyl=False, d=None, r_max=None):
    """``int (mu - W)_+^power`` over the window.

    ``W`` is a nodal array on ``grid`` (1D sum ``h sum`` or radial trapezoid)
    or a callable radial profile ``W(r)`` in three dimensions, integrated by
    adaptive quadrature.
    """
    if not power > 0:
        raise ValueError("power must be positive")
    if callable(W):
        d = 3 if d is None else d
        if d != 3:
            raise ValueError("analytic profiles are integrated as radial 3D functions")
        f = lambda r: max(mu - W(r), 0.0) ** power * r * r
        if r_max is None:
            r_max = _support_radius(lambda r: mu - W(r))
        if r_max == 0.0:
            return 0.0
        val, _ = integrate.quad(f, 0.0, r_max, limit=500)
        value = 4.0 * math.pi * val
    else:
        if grid is None:
            raise ValueError("nodal W needs its grid")
        W = np.asarray(W, dtype=float)
        d = getattr(grid, "d", 1)
        if d == 3:
            from .radial3d import radial_semiclassical

            value = radial_semiclassical(W, mu, grid, power)
        else:
            mask = grid.window_mask
            value = float(np.sum(grid.weights[mask] * np.maximum(mu - W[mask], 0.0) ** power))
    if weyl:
        value *= weyl_prefactor(d)
    return value


def _support_radius(g, r0=1e-8, r1=1e12):
    """Outer edge of ``{g > 0}`` located on a geometric scan, then refined by root finding."""
    rs = np.geomspace(r0, r1, 2001)
    pos = np.flatnonzero([g(r) > 0 for r in rs])
    if pos.size == 0:
        return 0.0
    i = int(pos[-1])
    if i + 1 == rs.size:
        return float(r1)
    return float(optimize.brentq(g, rs[i], rs[i + 1], xtol=1e-14, rtol=1e-15))


def weyl_prefactor(d):
    return 1.0 / ((2.0 * math.sqrt(math.pi)) ** d * math.gamma(d / 2.0 + 1.0))


def lieb_thirring_constant(gamma, d):
    """Default ``L_{gamma,d}``.

    Semiclassical value ``Gamma(g+1) / ((4 pi)^(d/2) Gamma(g+d/2+1))`` for
    ``gamma >= 3/2`` (Laptev-Weidl, sharp there); for ``1 <= gamma < 3/2``
    the factor 1.456 of Frank, Hundertmark, Jex and Nam, "The Lieb-Thirring
    inequality revisited", JEMS 23 (2021).  Below 1 no default is offered.
    """
    if gamma < 1:
        raise ConfigError(f"no default Lieb-Thirring constant for gamma={gamma} < 1; pass one explicitly")
    cl = math.gamma(gamma + 1) / ((4 * math.pi) ** (d / 2) * math.gamma(gamma + d / 2 + 1))
    return cl if gamma >= 1.5 else 1.456 * cl


# Reports -------------------------------------------------------------------------


@dataclass
class CheckRow:
    check: str
    x: float
    left: float
    right: float
    ok: bool | None
    note: str = ""

    @property
    def margin(self):
        if self.left is None or self.right is None:
            return None
        return float(self.right - self.left)


def _leq(left, right):
    return bool(left <= right + _RTOL * max(1.0, abs(left), abs(right)))


@dataclass
class BoundsReport:
    kind: str
    constants: dict
    rows: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    applicable: bool = True

    @property
    def violations(self):
        return sum(1 for r in self.rows if r.ok is False)

    @property
    def worst(self):
        checked = [r for r in self.rows if r.ok is not None]
        return min(checked, key=lambda r: r.margin) if checked else None

    @property
    def worst_margin(self):
        w = self.worst
        return None if w is None else w.margin

    @property
    def status(self):
        if not self.applicable:
            return "N/A"
        return "PASS" if self.violations == 0 else "FAIL"

    def rows_for(self, check):
        return [r for r in self.rows if r.check == check]

    def to_dict(self):
        w = self.worst
        return {
            "kind": self.kind,
            "status": self.status,
            "violations": self.violations,
            "worst_margin": self.worst_margin,
            "worst": None if w is None else _row_dict(w),
            "constants": self.constants,
            "notes": list(self.notes),
            "rows": [_row_dict(r) for r in self.rows],
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            write_report_rows(csv.writer(fh, lineterminator="\n"), [self], header=True)


def _num(v):
    if v is None:
        return None
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


def _row_dict(r):
    return {"check": r.check, "x": _num(r.x), "left": _num(r.left), "right": _num(r.right),
            "margin": _num(r.margin), "ok": r.ok, "note": r.note}


def _fmt(v):
    if v is None:
        return "NA"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_report_rows(writer, reports, header=True):
    if header:
        writer.writerow(["kind", "check", "x", "left", "right", "margin", "ok", "note"])
    for rep in reports:
        for r in rep.rows:
            writer.writerow([rep.kind, r.check, _fmt(r.x), _fmt(r.left), _fmt(r.right),
                             _fmt(r.margin), _fmt(r.ok), r.note])


# Counting models -------------------------------------------------------------------


@dataclass
class CountingModel:
    """A landscape together with the counting function of ``-Δ + V``."""

    field: object
    count_V: Callable[[float], int]
    negative_eigenvalues: Callable[[], np.ndarray]

    @property
    def M(self):
        return self.field.M

    def count_shifted(self, mu):
        """Eigenvalues of ``-Δ + V + M`` at or below ``mu``."""
        return self.count_V(mu - self.M)


def model_from_operator(field_, op, eig_tol=1e-12):
    """Model for a 1D operator ``op = -Δ_h + V + M`` that produced ``field_``."""
    M = op.M
    cache = {}

    def eigs():
        if "e" not in cache:
            e = spectrum_below(op, M, eig_tol) - M
            cache["e"] = e[e < 0]
        return cache["e"]

    return CountingModel(field=field_, count_V=lambda mu: count_below(op, mu + M), negative_eigenvalues=eigs)


def model_from_radial(field_, spec, count_grid):
    from .radial3d import radial_count

    def eigs():
        raise NotImplementedError("radial eigenvalue lists are not assembled; use counts")

    return CountingModel(field=field_, count_V=lambda mu: radial_count(spec, mu, count_grid), negative_eigenvalues=eigs)


# Constants -----------------------------------------------------------------------


def _scale_ok(grid, s):
    return grid.h * (1 - 1e-9) <= s <= 2 * grid.W * (1 + 1e-9)


def clr_constants(field_, mus, base_scales=None, max_rounds=20):
    """Constants of the two-sided counting bound, with ``C_HM`` measured on every box used.

    The checks look at boxes of side ``mu^(-1/2)``, ``(K mu)^(-1/2)`` and
    ``(C mu)^(-1/2)`` for the upper constant ``C``; those sides join the
    dyadic scan and the constants are recomputed until they settle.
    """
    grid = field_.grid
    d = getattr(grid, "d", 1)
    base = list(gridmod.dyadic_scales(grid) if base_scales is None else base_scales)
    mus = [m for m in mus if m > 0]
    scales = set(base) | {m**-0.5 for m in mus}
    seen = None
    for _ in range(max_rounds):
        diag = harnack_constants(field_, sorted(s for s in scales if _scale_ok(grid, s)))
        C_HM = diag.C_HM
        K = math.ceil(math.sqrt(2.0 * C_HM)) ** 2
        c_up_stmt = 1.01 * 4 * d * C_HM**2 / math.pi**2
        c_up_proof = max(c_up_stmt, _HM_FACTOR * C_HM)
        new = {(f * m) ** -0.5 for m in mus for f in (K, c_up_stmt, c_up_proof)}
        key = (C_HM, K)
        if new <= scales and key == seen:
            break
        scales |= new
        seen = key
    c_low_stmt = 1 + 2 ** (d + 2) * C_HM**2
    c_low_safe = 1 + 4 * 2 ** (d + 2) * C_HM**2
    return {
        "d": d,
        "C_HM": C_HM,
        "C_HM_scale": diag.C_HM_scale,
        "C_HM_cell": list(diag.C_HM_cell),
        "A_M": diag.A_M,
        "K": K,
        "C_up_statement": c_up_stmt,
        "C_up_proof": c_up_proof,
        "C_low_statement": c_low_stmt,
        "C_low_safe": c_low_safe,
        "C0_statement": K * c_up_stmt,
        "C0_proof": K * c_up_proof,
        "c0_statement": 1.0 / (K * c_low_stmt),
        "c0_safe": 1.0 / (K * c_low_safe),
        "n_scales": len(diag.scales),
    }


def kato_constants(field_, c=2.0, scales=None):
    if not c > 1:
        raise ConfigError("c must exceed 1")
    diag = harnack_constants(field_, scales, c=c)
    value, source = diag.effective_C_tilde_H()
    return {
        "c": c,
        "A_M": diag.A_M,
        "C_c": diag.C_c,
        "C_tilde_H": value,
        "C_tilde_H_source": source,
        "C_tilde_H_qualifying": diag.C_tilde_H,
        "C_tilde_H_all": diag.C_tilde_H_all,
        "C_tilde_H_cell": None if value is None else list(
            diag.C_tilde_H_cell if source == "qualifying-boxes" else diag.C_tilde_H_all_cell),
    }


# Checks ------------------------------------------------------------------------------


def _count_or_none(field_, mu, mode, lower_side, **kw):
    """Box count; outside ``[h, 2W]`` a lower-side count is 0 (no window cell) and an upper-side one is unknown."""
    try:
        return box_counts(field_, mu, mode, **kw), ""
    except GridError:
        side = box_scale(mu, mode, kw.get("C_c"))
        if lower_side and side > 2 * field_.grid.W:
            return 0, "no window cell"
        return None, f"cell side {side:.6g} outside [h, 2W]"


def _row(check, x, left, right, note="", counted=True):
    if left is None or right is None:
        return CheckRow(check, x, left, right, None, note or "not evaluable")
    ok = _leq(left, right)
    if not counted:
        return CheckRow(check, x, left, right, None, (note + "; " if note else "") + ("holds" if ok else "fails"))
    return CheckRow(check, x, left, right, ok, note)


def check_comparison(field_, mus, constants=None):
    constants = constants or clr_constants(field_, mus)
    d = constants["d"]
    K = constants["K"]
    rep = BoundsReport("comparison", constants)
    for mu in mus:
        if not mu > 0:
            rep.notes.append(f"mu={mu} skipped: the box counts need mu > 0")
            continue
        n, note_n = _count_or_none(field_, mu, "n", True)
        N, note_N = _count_or_none(field_, mu, "N", False)
        nK, note_K = _count_or_none(field_, K * mu, "n", False)
        vol = sublevel_volume(field_, mu, method="linear")
        scaled = mu ** (d / 2) * vol
        rep.rows.append(_row("n<=scaled_volume", mu, n, scaled, note_n))
        rep.rows.append(_row("scaled_volume<=N", mu, scaled, N, note_N))
        rep.rows.append(_row("N<=n(K mu)", mu, N, nK, note_K))
    return rep


def check_clr_sandwich(model, mus, constants=None, upper="statement"):
    """Upper ``N^{V+M}(mu) <= N(C_up mu)``; lower ``n(mu) <= N^{V+M}(C_low mu)``.

    ``upper`` selects which upper constant is counted (``statement``,
    ``proof`` or ``both``); the other is reported as informational.
    """
    if upper not in ("statement", "proof", "both"):
        raise ConfigError(f"unknown upper constant choice {upper!r}")
    field_ = model.field
    constants = dict(constants or clr_constants(field_, mus))
    constants["upper_counted"] = upper
    rep = BoundsReport("clr_sandwich", constants)
    for mu in mus:
        if not mu > 0:
            rep.notes.append(f"mu={mu} skipped: the box counts need mu > 0")
            continue
        cnt = model.count_shifted(mu)
        for variant in ("statement", "proof"):
            C = constants[f"C_up_{variant}"]
            N, note = _count_or_none(field_, C * mu, "N", False)
            counted = upper in (variant, "both")
            rep.rows.append(_row(f"upper[{variant}]", mu, cnt, N, note, counted))
        n, note = _count_or_none(field_, mu, "n", True)
        for variant in ("statement", "safe"):
            C = constants[f"C_low_{variant}"]
            rep.rows.append(_row(f"lower[{variant}]", mu, n, model.count_shifted(C * mu), note))
    return rep


def check_kato_lower(model, mus, c=2.0, constants=None):
    field_ = model.field
    constants = constants or kato_constants(field_, c)
    rep = BoundsReport("kato_lower", constants)
    for mu in mus:
        if not mu < 0:
            rep.notes.append(f"mu={mu} skipped: needs mu < 0")
            continue
        nc, note = _count_or_none(field_, mu, "n_c", True, c=constants["c"], C_c=constants["C_c"])
        rep.rows.append(_row("n_c<=count", mu, nc, model.count_V(mu), note))
    return rep


def check_kato_sublevel_lower(model, mus, c=2.0, constants=None):
    field_ = model.field
    constants = constants or kato_constants(field_, c)
    rep = BoundsReport("kato_sublevel_lower", constants)
    Ct = constants["C_tilde_H"]
    if Ct is None:
        rep.applicable = False
        rep.notes.append("C_tilde_H absent: no box with negative effective potential")
        return rep
    d = getattr(field_.grid, "d", 1)
    for mu in mus:
        if not mu < 0:
            rep.notes.append(f"mu={mu} skipped: needs mu < 0")
            continue
        vol = sublevel_volume(field_, constants["c"] * mu / Ct, values="W")
        left = (constants["C_c"] * abs(mu)) ** (d / 2) * vol
        rep.rows.append(_row("scaled_volume<=count", mu, left, model.count_V(mu)))
    return rep


def check_kato_clr_upper(model, mus, eps_rel=1e-6):
    """Ratio ``N^V(mu) / (A_M^d int (mu + eps - W)_+^(d/2))`` over the grid; d=3 only."""
    field_ = model.field
    grid = field_.grid
    d = getattr(grid, "d", 1)
    lo, hi = gridmod.window_extrema(grid, field_.u)
    A_M = hi / lo
    constants = {"A_M": A_M, "eps_rel": eps_rel, "d": d}
    rep = BoundsReport("kato_clr_upper", constants)
    if d < 3:
        rep.applicable = False
        rep.notes.append("the effective CLR upper bound is stated for d >= 3 only")
        return rep
    W = field_.W
    ratios = []
    for mu in mus:
        eps = eps_rel * abs(mu) if mu != 0 else eps_rel
        denom = A_M**d * semiclassical_integral(W, mu + eps, d / 2, grid=grid)
        cnt = model.count_V(mu)
        finite = denom > 0 or cnt == 0
        ratio = cnt / denom if denom > 0 else (0.0 if cnt == 0 else math.inf)
        ratios.append(ratio)
        rep.rows.append(CheckRow("ratio_finite", mu, ratio, math.inf, finite, ""))
    finite = [r for r in ratios if math.isfinite(r)]
    constants["max_ratio"] = max(finite) if finite else None
    return rep


def _layer(gamma, d):
    return gamma / (gamma + d / 2)


def check_lt_two_sided(model, gammas, constants, c=2.0, kato=None, lt_constants=None, upper="statement"):
    """Both pairs of moment bounds at each ``gamma``.

    ``constants`` come from :func:`clr_constants`; ``lt_constants`` maps
    ``gamma`` to ``L_{gamma,d}`` overriding :func:`lieb_thirring_constant`.
    """
    field_ = model.field
    grid = field_.grid
    d = constants["d"]
    M = field_.M
    eigs = model.negative_eigenvalues()
    kato = kato or kato_constants(field_, c)
    const = {"clr": dict(constants), "kato": dict(kato), "upper_counted": upper}
    rep = BoundsReport("lt_two_sided", const)
    if eigs.size == 0:
        rep.applicable = False
        rep.notes.append("no negative eigenvalue: E0 >= 0")
        return rep
    E0 = float(eigs.min())
    delta = M - abs(E0)
    const.update({"E0": E0, "delta": delta})
    if not delta > 0:
        rep.applicable = False
        rep.notes.append("shift M does not exceed |E0|")
        return rep
    C0 = constants["C0_proof" if upper == "proof" else "C0_statement"]
    c0 = constants["c0_statement"]
    const.update({"C0": C0, "c0": c0})
    inv_u = 1.0 / field_.u
    W = field_.W
    mask = grid.window_mask
    w = grid.weights[mask]
    Ct = kato["C_tilde_H"]
    A_M = kato["A_M"]
    per_gamma = {}
    for g in gammas:
        if not g > 0:
            raise ConfigError("gamma must be positive")
        p = g + d / 2
        trace = float(np.sum(np.abs(eigs) ** g))
        entry = {"trace": trace}
        c_g = c0 ** (d / 2) * _layer(g, d) * min(1.0, delta / abs(E0)) ** (d / 2)
        lower = c_g * float(np.sum(w * np.maximum(abs(E0) + delta - inv_u[mask] / c0, 0.0) ** p))
        rep.rows.append(_row("shifted-lower", g, lower, trace))
        entry["c_gamma"] = c_g
        if g >= 1:
            C_g = C0 ** (d / 2) * _layer(g, d) * (1 + abs(E0) / delta) ** (d / 2)
            upper_v = C_g * float(np.sum(w * np.maximum(abs(E0) + 2 * delta - inv_u[mask] / C0, 0.0) ** p))
            rep.rows.append(_row("shifted-upper", g, trace, upper_v))
            entry["C_gamma"] = C_g
        neg = float(np.sum(w * np.maximum(-W[mask], 0.0) ** p))
        if Ct is not None:
            k = kato["C_c"] ** (d / 2) * _layer(g, d) * (Ct / kato["c"]) ** p
            rep.rows.append(_row("effective-lower", g, k * neg, trace))
            entry["k_gamma"] = k
        else:
            rep.rows.append(CheckRow("effective-lower", g, None, trace, None, "C_tilde_H absent"))
        if g >= 1:
            L = (lt_constants or {}).get(g)
            L = lieb_thirring_constant(g, d) if L is None else L
            right = L * A_M ** (2 * g + d) * neg
            note = "" if d >= 3 else "outside the d >= 3 hypothesis"
            rep.rows.append(_row("effective-upper", g, trace, right, note))
            entry["L_gamma"] = L
        per_gamma[str(g)] = entry
    const["per_gamma"] = per_gamma
    return rep


def verify_bounds(kind, model, *, mus=None, gammas=None, c=2.0, constants=None, upper="statement",
                  eps_rel=1e-6, lt_constants=None):
    """Dispatch to the check for ``kind``; ``model`` is a :class:`CountingModel`."""
    if kind not in KINDS:
        raise ConfigError(f"unknown bound kind {kind!r}")
    field_ = model.field
    if kind == "comparison":
        return check_comparison(field_, mus, constants)
    if kind == "clr_sandwich":
        return check_clr_sandwich(model, mus, constants, upper=upper)
    if kind == "kato_lower":
        return check_kato_lower(model, mus, c)
    if kind == "kato_sublevel_lower":
        return check_kato_sublevel_lower(model, mus, c)
    if kind == "kato_clr_upper":
        return check_kato_clr_upper(model, mus, eps_rel)
    if constants is None:
        if not mus:
            raise ConfigError("lt_two_sided needs the positive mu-grid that fixes the counting constants")
        constants = clr_constants(field_, mus)
    return check_lt_two_sided(model, gammas or [1.0], constants, c=c, lt_constants=lt_constants, upper=upper)
