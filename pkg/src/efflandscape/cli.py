"""Scenario runner.

A scenario is one JSON document; every subcommand reads the same format and
writes its outputs into one directory.  Exit status: 0 when no check fails,
2 on a violated inequality, 1 on a configuration or solver error.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import bounds as bnd
from .exceptions import ConfigError, LandscapeError
from .grid import build_grid
from .groundstate import groundstate_lower_bound, iterate_M
from .landscape import global_harnack_ratio, harnack_constants, solve_landscape
from .potentials import PotentialSpec, sample_potential
from .radial3d import asymptotics_ratio, build_radial_grid, radial_counts, radial_landscape, write_asymptotics_csv
from .spectral import CountingCurve, assemble, counting_curve, write_curves_csv

OUT_ENV = "EFFLANDSCAPE_OUT"
EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2

DEFAULTS = {
    "M": 2.0,
    "mu_grid": {"start": 0.06, "stop": 3.0, "num": 50},
    "kato_mu_grid": {"start": -0.45, "stop": -0.01, "num": 45},
    "checks": [],
    "gammas": [1.0],
    "c": 2.0,
    "upper_constant": "statement",
    "eps_rel": 1e-6,
    "lt_constants": {},
    "eig_tol": 1e-12,
    "threads": 1,
}
ITERATION_DEFAULTS = {"M0": 10.0, "tol": 1e-8, "max_steps": 200}
ASYMPTOTICS_DEFAULTS = {"M": 1.0, "exact": "auto", "substituted": True}
CHECKS = set(bnd.KINDS) | {"iteration", "asymptotics"}


# Configuration ---------------------------------------------------------------------


def load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def resolve_config(raw):
    cfg = copy.deepcopy(DEFAULTS)
    cfg.update(copy.deepcopy(raw))
    for key in ("potential", "grid"):
        if key not in cfg:
            raise ConfigError(f"config is missing {key!r}")
    cfg["potential"] = PotentialSpec.from_dict(cfg["potential"]).to_dict()
    unknown = set(cfg["checks"]) - CHECKS
    if unknown:
        raise ConfigError(f"unknown checks: {sorted(unknown)}")
    if "iteration" in cfg["checks"] or "iteration" in raw:
        cfg["iteration"] = {**ITERATION_DEFAULTS, **raw.get("iteration", {})}
    if "asymptotics" in cfg["checks"] or "asymptotics" in raw:
        cfg["asymptotics"] = {**ASYMPTOTICS_DEFAULTS, **raw.get("asymptotics", {})}
    if cfg["upper_constant"] not in ("statement", "proof", "both"):
        raise ConfigError("upper_constant must be 'statement', 'proof' or 'both'")
    return cfg


def mu_values(spec, name):
    if isinstance(spec, list):
        vals = [float(v) for v in spec]
    elif isinstance(spec, dict) and "values" in spec:
        vals = [float(v) for v in spec["values"]]
    elif isinstance(spec, dict) and {"start", "stop", "num"} <= spec.keys():
        vals = [float(v) for v in np.linspace(spec["start"], spec["stop"], int(spec["num"]))]
    else:
        raise ConfigError(f"{name} needs 'values' or 'start'/'stop'/'num'")
    if not vals:
        raise ConfigError(f"{name} is empty")
    return sorted(vals)


def make_grid(gcfg):
    d = gcfg.get("d", 1)
    try:
        if d == 3:
            return build_radial_grid(gcfg["h"], gcfg["R"], gcfg.get("W"))
        return build_grid(d, gcfg["L"], gcfg["h"], gcfg["W"])
    except KeyError as exc:
        raise ConfigError(f"grid config is missing {exc.args[0]!r}") from None


# Pipeline ----------------------------------------------------------------------------


class Scenario:
    def __init__(self, cfg, out_dir):
        self.cfg = cfg
        self.out = Path(out_dir)
        self.spec = PotentialSpec.from_dict(cfg["potential"])
        self.grid = make_grid(cfg["grid"])
        self.d = getattr(self.grid, "d", 1)
        self.threads = int(cfg.get("threads", 1))
        self.report = {"config": cfg}
        self.curves = []
        self.bound_reports = []
        self._field = self._op = self._model = None
        self._validate()

    def _validate(self):
        checks = set(self.cfg["checks"])
        if self.d == 3:
            flat = checks & {"comparison", "clr_sandwich", "kato_lower", "kato_sublevel_lower", "lt_two_sided"}
            if flat:
                raise ConfigError(f"checks {sorted(flat)} need a 1D grid; radial grids support kato_clr_upper")
        elif "asymptotics" in checks:
            raise ConfigError("asymptotics need a radial (d=3) potential and grid")
        if "kato_clr_upper" in checks and self.d != 3:
            raise ConfigError("kato_clr_upper is defined for d=3 only")
        if checks & {"comparison", "clr_sandwich", "lt_two_sided"}:
            mu_values(self.cfg["mu_grid"], "mu_grid")
        if checks & {"kato_lower", "kato_sublevel_lower", "kato_clr_upper"}:
            mu_values(self.cfg["kato_mu_grid"], "kato_mu_grid")

    # landscape and counting model
    @property
    def field(self):
        if self._field is None:
            M = float(self.cfg["M"])
            if self.d == 3:
                self._field = radial_landscape(self.spec, M, self.grid)
            else:
                self._op = assemble(sample_potential(self.spec, self.grid), M)
                self._field = solve_landscape(self._op)
        return self._field

    @property
    def model(self):
        if self._model is None:
            f = self.field
            if self.d == 3:
                cg = self.cfg.get("count_grid")
                self._model = bnd.model_from_radial(f, self.spec, make_grid({"d": 3, **cg}) if cg else self.grid)
            else:
                self._model = bnd.model_from_operator(f, self._op, self.cfg["eig_tol"])
        return self._model

    def do_landscape(self):
        f = self.field
        entry = {
            "M": f.M,
            "residual": f.residual,
            "min_u": float(f.u.min()),
            "max_u": float(f.u.max()),
            "groundstate_lower_bound": groundstate_lower_bound(f),
        }
        if self.d == 1:
            entry["harnack"] = harnack_constants(f, c=self.cfg["c"]).to_dict()
            eigs = self.model.negative_eigenvalues()
            entry["negative_eigenvalues"] = [float(e) for e in eigs]
        else:
            entry["A_M"] = global_harnack_ratio(f)
        self.report["landscape"] = entry
        f.to_csv(self.out / "landscape.csv")

    def do_count(self):
        mus = mu_values(self.cfg.get("count_mu_grid", self.cfg["kato_mu_grid"]), "count_mu_grid")
        if self.d == 3:
            counts = radial_counts(self.spec, mus, self.grid, threads=self.threads)
            curve = CountingCurve(mus, counts, "inertia")
        else:
            op0 = assemble(sample_potential(self.spec, self.grid), 0.0)
            curve = counting_curve(op0, mus, self.threads)
        self.curves.append(curve)
        self.report["count"] = {"mu": curve.mu.tolist(), "count": curve.count.tolist()}

    def do_bounds(self):
        checks = [k for k in bnd.KINDS if k in self.cfg["checks"]]
        cfg = self.cfg
        pos = mu_values(cfg["mu_grid"], "mu_grid") if self.d == 1 else []
        neg = mu_values(cfg["kato_mu_grid"], "kato_mu_grid")
        model = self.model
        constants = bnd.clr_constants(model.field, pos) if pos and set(checks) & {
            "comparison", "clr_sandwich", "lt_two_sided"} else None
        lt = {float(k): float(v) for k, v in cfg["lt_constants"].items()}
        for kind in checks:
            mus = pos if kind in ("comparison", "clr_sandwich", "lt_two_sided") else neg
            rep = bnd.verify_bounds(kind, model, mus=mus, gammas=cfg["gammas"], c=cfg["c"], constants=constants,
                                    upper=cfg["upper_constant"], eps_rel=cfg["eps_rel"], lt_constants=lt)
            self.bound_reports.append(rep)
        if self.d == 1 and pos:
            self._box_curves(pos, neg)
        self.report["bounds"] = [r.to_dict() for r in self.bound_reports]

    def _box_curves(self, pos, neg):
        f, op = self.field, self._op
        d = self.d
        self.curves.append(CountingCurve(pos, [bnd.count_below(op, m) for m in pos], "inertia"))
        for mode in ("N", "n"):
            vals = [bnd._count_or_none(f, m, mode, True)[0] for m in pos]
            if all(v is not None for v in vals):
                self.curves.append(CountingCurve(pos, vals, f"box-{mode}"))
        scaled = [m ** (d / 2) * bnd.sublevel_volume(f, m, method="linear") for m in pos]
        self.curves.append(CountingCurve(pos, scaled, "sublevel-volume-scaled"))
        kc = bnd.kato_constants(f, self.cfg["c"])
        vals = [bnd._count_or_none(f, m, "n_c", True, c=kc["c"], C_c=kc["C_c"])[0] for m in neg]
        if all(v is not None for v in vals):
            self.curves.append(CountingCurve(neg, vals, "box-n_c"))

    def do_iterate(self):
        it = self.cfg.get("iteration") or dict(ITERATION_DEFAULTS)
        trace = iterate_M(self.spec, self.grid, it["M0"], it["tol"], it["max_steps"])
        self.report["iteration"] = trace.to_dict()
        trace.write_csv(self.out / "iteration.csv")

    def do_asymptotics(self):
        a = self.cfg.get("asymptotics") or dict(ASYMPTOTICS_DEFAULTS)
        if self.d != 3:
            raise ConfigError("asymptotics need a radial (d=3) potential and grid")
        if "mus" not in a:
            raise ConfigError("asymptotics config needs 'mus'")
        mus = mu_values(a["mus"], "asymptotics.mus")
        lg = make_grid({"d": 3, **a["landscape_grid"]}) if "landscape_grid" in a else self.grid
        cg = make_grid({"d": 3, **a["count_grid"]}) if "count_grid" in a else None
        rows, _ = asymptotics_ratio(self.spec, a["M"], mus, lg, cg, exact=a["exact"],
                                    substituted=a["substituted"], threads=self.threads)
        write_asymptotics_csv(self.out / "asymptotics.csv", rows)
        self.report["asymptotics"] = [vars(r) for r in rows]

    def finish(self):
        if self.curves:
            write_curves_csv(self.out / "curves.csv", self.curves)
        if self.bound_reports:
            import csv

            with open(self.out / "bounds.csv", "w", newline="") as fh:
                bnd.write_report_rows(csv.writer(fh, lineterminator="\n"), self.bound_reports)
        failed = [r for r in self.bound_reports if r.status == "FAIL"]
        self.report["status"] = "FAIL" if failed else "PASS"
        self.report["not_applicable"] = [r.kind for r in self.bound_reports if r.status == "N/A"]
        with open(self.out / "report.json", "w") as fh:
            json.dump(_clean(self.report), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return failed


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


STEPS = {
    "landscape": ("landscape",),
    "count": ("count",),
    "bounds": ("landscape", "bounds"),
    "iterate": ("iterate",),
    "asymptotics": ("asymptotics",),
}


def run(command, config_path, out=None, threads=None):
    raw = load_config(config_path)
    cfg = resolve_config(raw)
    if threads is not None:
        cfg["threads"] = threads
    out_dir = out or os.environ.get(OUT_ENV) or cfg.get("output_dir") or "efflandscape-out"
    cfg["output_dir"] = str(out_dir)
    sc = Scenario(cfg, out_dir)
    sc.out.mkdir(parents=True, exist_ok=True)
    if command == "run":
        steps = ["landscape"]
        if set(cfg["checks"]) & set(bnd.KINDS):
            steps.append("bounds")
        if "iteration" in cfg["checks"]:
            steps.append("iterate")
        if "asymptotics" in cfg["checks"]:
            steps.append("asymptotics")
    else:
        steps = list(STEPS[command])
    for step in steps:
        getattr(sc, f"do_{step}")()
    return sc.finish()


def build_parser():
    p = argparse.ArgumentParser(prog="efflandscape", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("landscape", "count", "bounds", "iterate", "asymptotics", "run"):
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, metavar="PATH")
        s.add_argument("--out", metavar="DIR", help=f"output directory (else ${OUT_ENV}, else the config)")
        s.add_argument("--threads", type=int, metavar="N", help="cap on worker threads")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        failed = run(args.command, args.config, args.out, args.threads)
    except (LandscapeError, OSError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if failed:
        for rep in failed:
            w = rep.worst
            print(f"violation: {rep.kind} {w.check} at x={w.x!r}: left={w.left!r} right={w.right!r} "
                  f"margin={w.margin!r} ({rep.violations} violation(s))", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
