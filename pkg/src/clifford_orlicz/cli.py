"""Command line front end.

Every subcommand writes one JSON report (to ``--out/report.json`` or
stdout) that embeds the fully resolved configuration. Commands that work
on builtin fields run at ``--refine`` grid levels ``h, h/2, ...``.

Exit codes: 0 ok, 1 usage, 2 bad input, 3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import analysis, fields
from .analysis import LinearSolverConfig, SolverError
from .grid import (
    BoundaryField,
    GeometryError,
    MultivectorField,
    build_ball,
    build_box,
    build_disc,
    dirac_apply,
    trace_restrict,
)
from .io import FieldFormatError, read_boundary_csv, read_field_csv, write_boundary_csv, write_field_csv, write_report
from .orlicz import (
    ConvergenceError,
    NormConfig,
    OrliczFunction,
    clifford_luxembourg_norm,
    slobodeckji_terms,
    sobolev_norm,
)
from .transforms import KernelConfig, NearBoundaryError, borel_pompeiu_residual, cauchy_boundary, teodorescu

EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    domain: str = "disc"
    radius: float = 1.0
    lengths: list = field(default_factory=lambda: [1.0, 1.0])
    h: float = 1 / 16
    refine: int = 2
    n_facets: int | None = None
    psi: dict = field(default_factory=lambda: {"kind": "power_over_p", "p": 2.0})
    k: int = 1
    lam: float = 1.0
    bisect_tol: float = 1e-10
    max_iter: int = 200
    kappa: float = 1.5
    solver_rel_tol: float = 1e-10
    solver_max_iter: int = 20000
    seed: int = 0
    suite_size: int = 50
    trial_count: int = 20
    field: str | None = None

    def validate(self):
        if self.domain not in ("disc", "ball", "box"):
            raise UsageError(f"unknown domain {self.domain!r}")
        for name in ("radius", "h", "lam", "bisect_tol", "kappa", "solver_rel_tol"):
            if not getattr(self, name) > 0:
                raise UsageError(f"{name} must be positive")
        for name in ("refine", "max_iter", "solver_max_iter", "suite_size", "trial_count"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be >= 1")
        if any(v <= 0 for v in self.lengths):
            raise UsageError("box lengths must be positive")
        if self.k not in (0, 1, 2):
            raise UsageError("k must be 0, 1 or 2")
        if self.kappa < 1:
            raise UsageError("kappa must be >= 1")
        if self.field is not None and self.field not in fields.BUILTIN:
            raise UsageError(f"unknown builtin field {self.field!r}; choose from {sorted(fields.BUILTIN)}")
        try:
            self.orlicz()
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"bad psi specification: {exc}") from None
        return self

    def orlicz(self):
        return OrliczFunction.from_spec(self.psi)

    def norm_cfg(self):
        return NormConfig(self.bisect_tol, self.max_iter, self.lam)

    def kernel_cfg(self):
        return KernelConfig(self.kappa)

    def solver_cfg(self):
        return LinearSolverConfig(self.solver_rel_tol, self.solver_max_iter)

    def levels(self):
        return [self.h / 2**i for i in range(self.refine)]

    def build(self, h=None):
        h = self.h if h is None else h
        if self.domain == "disc":
            return build_disc(self.radius, h, n_facets=self.n_facets)
        if self.domain == "ball":
            return build_ball(self.radius, h)
        return build_box(self.lengths, h)

    def to_dict(self):
        return dataclasses.asdict(self)


def load_config(args):
    cfg = RunConfig()
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise FieldFormatError(f"cannot read config {args.config}: {exc}") from None
        known = {f.name for f in dataclasses.fields(RunConfig)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg = dataclasses.replace(cfg, **data)
    for name in ("h", "refine", "seed", "field", "domain", "k"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, v)
    if getattr(args, "psi", None):
        try:
            cfg.psi = OrliczFunction.from_spec(args.psi).describe()
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"bad --psi {args.psi!r}: {exc}") from None
    try:
        return cfg.validate()
    except TypeError as exc:
        raise UsageError(f"config value of the wrong type: {exc}") from None


# ---------------------------------------------------------------------------
# helpers


def _convergence(values):
    """Ratios between consecutive levels and whether each level improved."""
    ratios = [values[i + 1] / values[i] if values[i] > 0 else None for i in range(len(values) - 1)]
    decreasing = all(values[i + 1] < values[i] for i in range(len(values) - 1))
    return {"ratios": ratios, "monotone_decreasing": decreasing}


def _field_norms(f, cfg, label):
    psi, ncfg = cfg.orlicz(), cfg.norm_cfg()
    out = {f"{label}_L_psi": clifford_luxembourg_norm(f, psi, ncfg)}
    for k in range(cfg.k + 1):
        out[f"{label}_W{k}_psi"] = sobolev_norm(f, k, psi, ncfg)
    return out


def _builtin(cfg, name, dom):
    return MultivectorField.from_function(dom, fields.builtin_field(name))


def _level_info(dom, mesh):
    return {"h": dom.h, "cells": dom.n_cells, "facets": mesh.n_facets}


def _out_path(args, name):
    if not args.out:
        return None
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _load_volume(args, cfg, dom, path_attr="field_file"):
    path = getattr(args, path_attr, None)
    if path:
        return read_field_csv(path, dom), path
    name = cfg.field or "monogenic-phi"
    return _builtin(cfg, name, dom), name


# ---------------------------------------------------------------------------
# commands


def cmd_make_field(args, cfg):
    name = cfg.field or "monogenic-phi"
    dom, mesh = cfg.build()
    f = _builtin(cfg, name, dom)
    g = BoundaryField.from_function(mesh, fields.builtin_field(name))
    files = {}
    p = _out_path(args, f"{name}.csv")
    if p:
        write_field_csv(p, f)
        files["field"] = p
        pb = _out_path(args, f"{name}_boundary.csv")
        write_boundary_csv(pb, g)
        files["boundary"] = pb
    return {"field": name, "level": _level_info(dom, mesh), "files": files}


def cmd_norm(args, cfg):
    dom, mesh = cfg.build()
    f, source = _load_volume(args, cfg, dom)
    report = {"source": source, "level": _level_info(dom, mesh), "norms": _field_norms(f, cfg, "f")}
    if args.boundary_file:
        g = read_boundary_csv(args.boundary_file, mesh)
        kb = max(cfg.k, 1)
        single, double = slobodeckji_terms(g, kb, cfg.orlicz(), cfg.norm_cfg())
        report["norms"]["g_slobodeckji"] = {"k": kb, "single": single, "double": double, "total": single + double}
    report["norms"]["f_dual_lower_bound"] = {
        "trial_count": cfg.trial_count,
        "seed": cfg.seed,
        "value": analysis.dual_norm_lower_bound(f, cfg.orlicz(), cfg.trial_count, cfg.seed, cfg.norm_cfg()),
    }
    return report


def cmd_dirac(args, cfg):
    dom, mesh = cfg.build()
    f, source = _load_volume(args, cfg, dom)
    df = dirac_apply(f)
    p = _out_path(args, "dirac.csv")
    if p:
        write_field_csv(p, df)
    return {"source": source, "level": _level_info(dom, mesh), "norms": _field_norms(df, cfg, "Df")}


def cmd_teodorescu(args, cfg):
    dom, mesh = cfg.build()
    f, source = _load_volume(args, cfg, dom)
    tf = teodorescu(f, cfg.kernel_cfg())
    p = _out_path(args, "teodorescu.csv")
    if p:
        write_field_csv(p, tf)
    return {
        "source": source,
        "level": _level_info(dom, mesh),
        "norms": _field_norms(tf, cfg, "Tf"),
        "right_inverse_error": analysis.rel_l2(dirac_apply(tf) - f, f),
    }


def cmd_cauchy(args, cfg):
    dom, mesh = cfg.build()
    if args.boundary_file:
        g, source = read_boundary_csv(args.boundary_file, mesh), args.boundary_file
    else:
        name = cfg.field or "monogenic-phi"
        g, source = trace_restrict(_builtin(cfg, name, dom), mesh), name
    core = dom.subdomain(dom.core_selector(cfg.kappa))
    u = cauchy_boundary(g, core, cfg.kernel_cfg())
    p = _out_path(args, "cauchy.csv")
    if p:
        write_field_csv(p, u)
    return {
        "source": source,
        "level": _level_info(dom, mesh),
        "collar": {"kappa": cfg.kappa, "evaluated_cells": core.n_cells},
        "norms": _field_norms(u, cfg, "Fg"),
    }


def cmd_borel_pompeiu(args, cfg):
    names = [cfg.field] if cfg.field else ["poly-x1", "monogenic-phi", "zero-trace-bump"]
    out = {}
    for name in names:
        levels, errs = [], []
        for h in cfg.levels():
            dom, mesh = cfg.build(h)
            r = borel_pompeiu_residual(_builtin(cfg, name, dom), mesh, cfg.kernel_cfg())
            levels.append({**_level_info(dom, mesh), "rel_error": r.rel_error, "evaluated_cells": r.residual.domain.n_cells})
            errs.append(r.rel_error)
        out[name] = {"levels": levels, "convergence": _convergence(errs)}
    return {"fields": out, "collar": {"kappa": cfg.kappa, "policy": "residual measured on cells with distance >= kappa*h"}}


def cmd_decompose(args, cfg):
    psi = cfg.orlicz()
    levels_out = []
    residuals = []
    if args.field_file:
        dom, mesh = cfg.build()
        pairs = [(read_field_csv(args.field_file, dom), dom, mesh)]
        source = args.field_file
    else:
        source = cfg.field or "dbar-potential"
        pairs = []
        for h in cfg.levels():
            dom, mesh = cfg.build(h)
            pairs.append((_builtin(cfg, source, dom), dom, mesh))
    for i, (f, dom, mesh) in enumerate(pairs):
        kk = cfg.k if cfg.k in (1, 2) else None
        res = analysis.bergman_decompose(
            f, mesh, psi, cfg.solver_cfg(), cfg.kernel_cfg(), k=kk, norm_cfg=cfg.norm_cfg()
        )
        entry = {**_level_info(dom, mesh), **res.diagnostics}
        entry["monogenic_fraction"] = analysis.routed_fraction(res, "monogenic", psi, cfg.norm_cfg())
        entry["potential_fraction"] = analysis.routed_fraction(res, "potential", psi, cfg.norm_cfg())
        levels_out.append(entry)
        residuals.append(res.diagnostics["monogenicity_residual"])
        if i == 0:
            p = _out_path(args, "monogenic_part.csv")
            if p:
                write_field_csv(p, res.monogenic_part)
                write_field_csv(_out_path(args, "potential_part.csv"), res.potential_part)
    return {"source": source, "levels": levels_out, "monogenicity_convergence": _convergence(residuals)}


def _bvp_data(kind, dom, mesh):
    if kind == "manufactured":
        f = MultivectorField.from_function(dom, fields.bvp_manufactured_dirac)
        g = BoundaryField.from_function(mesh, fields.bvp_manufactured)
        return f, g, fields.bvp_manufactured
    if kind == "monogenic":
        return MultivectorField.zeros(dom), BoundaryField.from_function(mesh, fields.monogenic_phi), fields.monogenic_phi
    if kind == "zero":
        return MultivectorField.zeros(dom), BoundaryField.zeros(mesh), None
    raise UsageError(f"unknown BVP data {kind!r}")


def cmd_solve_bvp(args, cfg):
    psi, k = cfg.orlicz(), max(cfg.k, 1)
    levels_out, errs = [], []
    if args.f_file or args.g_file:
        if not (args.f_file and args.g_file):
            raise UsageError("solve-bvp needs both F_FILE and G_FILE")
        dom, mesh = cfg.build()
        runs = [(read_field_csv(args.f_file, dom), read_boundary_csv(args.g_file, mesh), None, dom, mesh)]
        source = {"f": args.f_file, "g": args.g_file}
    else:
        runs = []
        for h in cfg.levels():
            dom, mesh = cfg.build(h)
            runs.append((*_bvp_data(args.data, dom, mesh), dom, mesh))
        source = args.data
    for i, (f, g, exact, dom, mesh) in enumerate(runs):
        rep = analysis.solve_first_order_bvp(f, g, psi, k, cfg.kernel_cfg(), cfg.norm_cfg())
        entry = {**_level_info(dom, mesh), **rep.to_dict()}
        if exact is not None:
            ue = MultivectorField.from_function(rep.solution.domain, exact)
            entry["solution_error"] = analysis.rel_l2(rep.solution - ue, ue)
            errs.append(entry["solution_error"])
        entry["solution_max_abs"] = float(np.abs(rep.solution.values).max(initial=0.0))
        levels_out.append(entry)
        if i == 0:
            p = _out_path(args, "solution.csv")
            if p:
                write_field_csv(p, rep.solution)
    report = {"source": source, "levels": levels_out}
    if errs:
        report["solution_convergence"] = _convergence(errs)
    ratios = [lv["norm_estimate"]["measured_ratio"] for lv in levels_out]
    if len(ratios) > 1 and all(r > 0 for r in ratios):
        report["ratio_stability"] = max(ratios) / min(ratios)
    return report


def cmd_probe(args, cfg):
    psi = cfg.orlicz()
    ops = [args.operator] if args.operator else list(analysis.OPERATORS)
    k = max(cfg.k, 1) if cfg.k <= 1 else 1
    out = {}
    for op in ops:
        per = []
        for h in cfg.levels():
            dom, mesh = cfg.build(h)
            rep = analysis.mapping_probe(op, dom, mesh, cfg.suite_size, k, psi, cfg.seed, cfg.kernel_cfg(), cfg.norm_cfg())
            per.append(rep.to_dict())
        maxima = [p["max_ratio"] for p in per]
        out[op] = {
            "levels": per,
            "max_ratios": maxima,
            "stability": max(maxima) / min(maxima) if min(maxima) > 0 else None,
            "all_finite": bool(np.all(np.isfinite(maxima))),
        }
    return {"k": k, "operators": out}


COMMANDS = {
    "norm": cmd_norm,
    "dirac": cmd_dirac,
    "teodorescu": cmd_teodorescu,
    "cauchy": cmd_cauchy,
    "borel-pompeiu": cmd_borel_pompeiu,
    "decompose": cmd_decompose,
    "solve-bvp": cmd_solve_bvp,
    "probe": cmd_probe,
    "make-field": cmd_make_field,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory (report.json and field files)")
    common.add_argument("--h", type=float, help="grid spacing")
    common.add_argument("--refine", type=int, help="number of grid levels h, h/2, ...")
    common.add_argument("--seed", type=int)
    common.add_argument("--domain", choices=["disc", "ball", "box"])
    common.add_argument("--field", help="builtin field: " + ", ".join(sorted(fields.BUILTIN)))
    common.add_argument("--psi", help="Young function, e.g. power:2, power_over_p:2, exp_minus_one")
    common.add_argument("--k", type=int, help="Sobolev order")

    p = _Parser(prog="clifford-orlicz", description="Clifford analysis on gridded domains")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "norm": "Orlicz, Orlicz-Sobolev, dual and boundary norms of a field",
        "dirac": "apply the Dirac operator",
        "teodorescu": "apply the Teodorescu (volume) transform",
        "decompose": "split a field into monogenic and potential parts",
        "cauchy": "Cauchy transform of boundary data on the collar-excluded cells",
        "borel-pompeiu": "Borel-Pompeiu residuals of builtin fields under refinement",
        "solve-bvp": "solve D u = f, trace u = g",
        "probe": "operator-norm ratio probes over a seeded random suite",
        "make-field": "write a builtin field and its boundary trace as CSV",
    }

    def add(name):
        return sub.add_parser(name, parents=[common], help=helps[name], description=helps[name])

    for name in ("norm", "dirac", "teodorescu", "decompose"):
        s = add(name)
        s.add_argument("field_file", nargs="?", help="volume field CSV (default: builtin --field)")
        if name == "norm":
            s.add_argument("--boundary-file", help="boundary field CSV for the Slobodeckji norm")
    s = add("cauchy")
    s.add_argument("--boundary-file", help="boundary field CSV (default: trace of --field)")
    add("borel-pompeiu")
    s = add("solve-bvp")
    s.add_argument("f_file", nargs="?", help="right-hand side f (volume CSV)")
    s.add_argument("g_file", nargs="?", help="boundary data g (boundary CSV)")
    s.add_argument("--data", default="manufactured", choices=["manufactured", "monogenic", "zero"],
                   help="builtin data when no files are given")
    s = add("probe")
    s.add_argument("--operator", choices=list(analysis.OPERATORS), help="probe one operator (default: all)")
    add("make-field")
    return p


def run(argv=None):
    """Run a command; returns ``(exit_code, report_text_or_message)``."""
    from .io import dumps_report

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        body = COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        return EXIT_USAGE, f"usage error: {exc}"
    except (FieldFormatError, GeometryError, NearBoundaryError, OSError, KeyError) as exc:
        return EXIT_INPUT, f"input error: {exc}"
    except (ConvergenceError, SolverError) as exc:
        return EXIT_NUMERIC, f"numerical error: {exc}"
    report = {"command": args.command, "config": cfg.to_dict(), **body}
    path = _out_path(args, "report.json")
    text = write_report(path, report) if path else dumps_report(report)
    return 0, text


def main(argv=None):
    code, text = run(argv)
    (sys.stdout if code == 0 else sys.stderr).write(text if text.endswith("\n") else text + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
