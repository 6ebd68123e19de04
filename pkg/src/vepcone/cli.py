"""Command-line front end: ``vep <command> <problem.json> --at x1 x2 ...``.

Every command prints a short human summary and, with ``--json PATH``, writes
the full report (sorted keys, no timestamps) to PATH (``-`` for stdout).
The human text is rendered from the same dictionary that is serialised.

Exit codes: 0 analysis completed, 1 input error, 2 a failed hypothesis probe
demoted an assertion to informational.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from . import registry
from .approx import (REPORT_SCHEMA, AnalysisContext, FamilyBaseError, NoEquilibriaError, NotEquilibriumError,
                     as_estimate, inner_cone, outer_cone)
from .cones import ConvexCone
from .deriv import MissingDerivativeError
from .expr import ExprDomainError
from .optimality import noc_check, soc_check
from .problem import DEFAULT_RADII, error_bound_probe, residual
from .problemfile import ProblemFileError, instance_to_dict, load_problem
from .tangent import default_directions

EXIT_OK, EXIT_INPUT, EXIT_DEMOTED = 0, 1, 2
SEED_ENV = "VEP_SEED"
COMMANDS = ("residual", "check-eq", "inner-cone", "outer-cone", "verify", "noc", "soc", "error-bound")

log = logging.getLogger("vepcone.cli")


class InputError(Exception):
    pass


# ---------------------------------------------------------------- helpers

def _clean(obj):
    """JSON-safe copy: numpy scalars/arrays to Python, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(report):
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def _seed_from_env():
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{SEED_ENV}={raw!r} is not an integer")


def _point(inst, at):
    if at is None:
        return inst.reference_point
    x = np.asarray(at, float)
    if x.shape != (inst.n,):
        raise InputError(f"--at: {x.shape[0]} coordinates given, the problem has n = {inst.n}")
    return x


def _direction_table(est):
    """Plot-ready rows: angle (2-d only), direction, score, member."""
    rows = []
    for v, s, ok in zip(est.directions, est.scores, est.verdicts):
        row = {"direction": [float(c) for c in v], "score": float(s), "member": bool(ok)}
        if len(v) == 2:
            row["angle_deg"] = round(float(np.degrees(np.arctan2(v[1], v[0]))) % 360.0, 10)
        rows.append(row)
    return rows


def _base(kind, inst, x):
    return {"schema": REPORT_SCHEMA, "kind": kind, "instance": inst.name,
            "x_bar": np.asarray(x, float).tolist(), "seed": inst.sampling.seed}


# ---------------------------------------------------------------- commands

def cmd_residual(inst, mp, x, args):
    r = residual(inst, x)
    rep = _base("residual", inst, x)
    rep.update({"residual": r.value, "argmax_z": r.z.tolist(), "n_samples": r.n_samples,
                "in_K": bool(inst.K.contains(x))})
    return rep, EXIT_OK


def cmd_check_eq(inst, mp, x, args):
    r = residual(inst, x)
    inK = bool(inst.K.contains(x))
    ok = inK and r.value <= inst.tol_eq
    rep = _base("check-eq", inst, x)
    rep.update({"equilibrium": ok, "in_K": inK, "residual": r.value, "tol": inst.tol_eq,
                "witness_z": None if ok else r.z.tolist()})
    return rep, EXIT_OK


def _cone_cmd(kind, inst, x, args):
    fn = inner_cone if kind == "inner" else outer_cone
    try:
        cone = fn(inst, x)
    except NotEquilibriumError as err:
        raise InputError(str(err))
    U = default_directions(inst.n)
    est = as_estimate(cone, U, x, kind)
    rep = _base(f"{kind}-cone", inst, x)
    rep["cone"] = cone.to_dict()
    rep["representation"] = "exact" if isinstance(cone, ConvexCone) else "sampled"
    rep["n_members"] = int(est.verdicts.sum())
    rep["n_directions"] = int(len(U))
    rep["directions"] = _direction_table(est)
    return rep, EXIT_OK


def cmd_inner(inst, mp, x, args):
    return _cone_cmd("inner", inst, x, args)


def cmd_outer(inst, mp, x, args):
    return _cone_cmd("outer", inst, x, args)


def _context(inst, x, args):
    return AnalysisContext(inst, x, radii=args.radii or DEFAULT_RADII)


def cmd_verify(inst, mp, x, args):
    report = _context(inst, x, args).verify()
    return report.to_dict(), EXIT_DEMOTED if report.demoted else EXIT_OK


def _need_objective(mp, name):
    if mp is None:
        raise InputError(f"{name} needs an 'objective' block in the problem file")
    return mp


def _optimality(fn, inst, mp, x, args, name):
    from .optimality import MpvecInstance

    mp = _need_objective(mp, name)
    mp = MpvecInstance(inst, mp.objective, x, mp.name, mp.metadata)
    rep = fn(mp, _context(inst, x, args))
    return rep, EXIT_OK if rep["theorem_applicable"] else EXIT_DEMOTED


def cmd_noc(inst, mp, x, args):
    return _optimality(noc_check, inst, mp, x, args, "noc")


def cmd_soc(inst, mp, x, args):
    return _optimality(soc_check, inst, mp, x, args, "soc")


def cmd_error_bound(inst, mp, x, args):
    ctx = _context(inst, x, args)
    ctx.require_equilibrium()
    eb = error_bound_probe(ctx.oracle, x, ctx.radii)
    rep = _base("error-bound", inst, x)
    rep.update(eb.to_dict())
    rep["holds"] = eb.holds
    return rep, EXIT_OK


HANDLERS = {"residual": cmd_residual, "check-eq": cmd_check_eq, "inner-cone": cmd_inner,
            "outer-cone": cmd_outer, "verify": cmd_verify, "noc": cmd_noc, "soc": cmd_soc,
            "error-bound": cmd_error_bound}


# ---------------------------------------------------------------- human output

def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "(" + ", ".join(_fmt(c) for c in v) + ")"
    return str(v)


def _cone_line(name, d):
    if d.get("type") == "halfspaces":
        rows = d.get("A") or []
        if not rows:
            return f"{name}: whole space"
        return f"{name}: {{v : A v >= 0}}, A = " + "; ".join(_fmt(r) for r in rows)
    if d.get("type") == "generators":
        return f"{name}: cone generated by " + "; ".join(_fmt(g) for g in np.asarray(d["G"]).T.tolist())
    return f"{name}: sampled, {d.get('n_members')} member directions"


def render(rep):
    kind = rep["kind"]
    out = [f"[{kind}] {rep['instance']} at x = {_fmt(rep['x_bar'])} (seed {rep['seed']})"]
    if kind == "residual":
        out.append(f"residual = {_fmt(rep['residual'])} attained at z = {_fmt(rep['argmax_z'])}"
                   f" ({rep['n_samples']} z-samples)")
    elif kind == "check-eq":
        word = "equilibrium" if rep["equilibrium"] else "not an equilibrium"
        out.append(f"{word}: residual {_fmt(rep['residual'])} vs tol {_fmt(rep['tol'])}")
        if not rep["in_K"]:
            out.append("x is not in K")
        if rep["witness_z"] is not None:
            out.append(f"violating z = {_fmt(rep['witness_z'])}")
    elif kind in ("inner-cone", "outer-cone"):
        out.append(_cone_line(kind.split("-")[0] + " cone", rep["cone"]))
        out.append(f"{rep['n_members']} of {rep['n_directions']} grid directions are members")
    elif kind == "verify":
        for key in ("inner", "outer"):
            out.append(_cone_line(f"{key} cone", rep["cones"][key]))
        out.append(f"contingent estimate: {rep['cones']['contingent']['n_members']} member directions")
        for key, inc in rep["inclusions"].items():
            word = "holds" if inc["holds"] else "VIOLATED"
            if inc["strict"]:
                word += " (strict)"
            out.append(f"{inc['name']}: {word} [{inc['status']}]")
        cor = rep["corollary"]
        out.append(f"corollary: {cor['status']}, equal on grid: {cor['equal_on_grid']}")
        out.append(f"error bound: {rep['hypotheses']['error_bound']['message']}")
        for flag in rep["flags"]:
            out.append(f"flag: {flag}")
    elif kind in ("noc", "soc", "noc-decomposed"):
        out.append(f"verdict: {rep['verdict']}")
        out.append(rep["message"])
        if rep.get("witness") is not None:
            out.append(f"witness v = {_fmt(rep['witness'])}, margin {_fmt(rep.get('margin'))}")
        if rep.get("violating") is not None:
            out.append(f"violating subgradient {_fmt(rep['violating'])}")
    elif kind == "error-bound":
        for r, k in zip(rep["radii"], rep["kappa"]):
            out.append(f"  delta = {r:<8.3g} kappa = {_fmt(k)}")
        out.append(f"error bound {rep['message']}")
    elif kind == "export":
        out.append(f"problem document with {len(rep['document'])} blocks")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- argument parsing

def _common(p):
    p.add_argument("--at", nargs="+", type=float, metavar="X", help="reference point (default: x_bar of the file)")
    p.add_argument("--radii", nargs="+", type=float, metavar="R", help="error-bound radii")
    p.add_argument("--json", metavar="PATH", help="write the JSON report to PATH ('-' for stdout)")


def build_parser():
    ap = argparse.ArgumentParser(prog="vep", description=__doc__.splitlines()[0],
                                 epilog=f"Set {SEED_ENV} to override the sampling seed.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("file")
        _common(p)
    p = sub.add_parser("example", help="run a command on a built-in instance")
    p.add_argument("name", help="instance name, or 'list'")
    p.add_argument("subcommand", nargs="?", choices=COMMANDS + ("export",))
    _common(p)
    return ap


def _load(args, seed):
    if args.command == "example":
        if args.name == "list":
            return None, None
        try:
            doc = registry.problem_document(args.name)
        except KeyError as err:
            raise InputError(err.args[0])
        doc["metadata"] = {"golden": registry.golden(args.name)}
        return load_problem(doc, seed=seed)
    return load_problem(args.file, seed=seed)


def _emit(rep, args):
    text = dumps(rep)
    if args.json == "-":
        sys.stdout.write(text)
        return
    sys.stdout.write(render(rep))
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(text)


def run(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        seed = _seed_from_env()
        inst, mp = _load(args, seed)
        if inst is None:
            sys.stdout.write("\n".join(registry.names()) + "\n")
            return EXIT_OK
        command = args.subcommand if args.command == "example" else args.command
        if command is None:
            raise InputError("example: missing subcommand")
        x = _point(inst, args.at)
        if command == "export":
            doc = instance_to_dict(inst, mp.objective if mp is not None else None)
            rep = {"schema": REPORT_SCHEMA, "kind": "export", "instance": inst.name,
                   "x_bar": x.tolist(), "seed": inst.sampling.seed, "document": doc}
            code = EXIT_OK
        else:
            rep, code = HANDLERS[command](inst, mp, x, args)
        _emit(rep, args)
        return code
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
    except ProblemFileError as err:
        print(f"error: {err}", file=sys.stderr)
    except (InputError, NotEquilibriumError, NoEquilibriaError, ExprDomainError, FamilyBaseError,
            MissingDerivativeError) as err:
        print(f"error: {err}", file=sys.stderr)
    return EXIT_INPUT


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
