"""Problem files: one JSON document describing a VEP (and optionally an MPVEC).

Layout::

    {"name": ..., "dims": {"n": 2, "m": 2},
     "cone": {"type": "orthant", "dim": 2},
     "K": {"A": [[...]], "b": [...]}          (or {"type": "orthant"|"whole"}),
     "f": ["expr", ...],
     "x_bar": [...],                           (optional reference point)
     "bderiv": {"at": [...], "matrix_exprs": [[...]]}   (or "map_exprs": [...]),
     "objective": {"expr": "...", "structure": "convex"},
     "sampling": {"R_z": 10, "N_z": 512, "seed": 0, ...}}
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .cones import cone_from_dict, polyhedron_from_dict
from .deriv import DerivativeFamily, ScalarFn
from .expr import ExprSyntaxError, parse, to_source
from .problem import SamplingConfig, VepInstance

FORMAT = "vep-problem/1"


class ProblemFileError(ValueError):
    """Collects every problem found while loading, one per line."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid problem file:\n  " + "\n  ".join(self.problems))


def _vec(val, name, length, problems):
    try:
        v = np.asarray(val, float).reshape(-1)
    except (TypeError, ValueError):
        problems.append(f"{name}: expected a list of numbers")
        return None
    if length is not None and v.shape[0] != length:
        problems.append(f"{name}: length {v.shape[0]}, expected {length}")
        return None
    return v


def read_json(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"{path}: file not found")
    text = path.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise ProblemFileError([f"{path}: JSON syntax error at line {err.lineno}, column {err.colno}: {err.msg}"])


def load_problem(doc, seed=None):
    """Build ``(VepInstance, MpvecInstance | None)`` from a parsed document or a path."""
    from .optimality import MpvecInstance

    if isinstance(doc, (str, Path)):
        doc = read_json(doc)
    if not isinstance(doc, dict):
        raise ProblemFileError(["top level: expected a JSON object"])
    problems = []
    for key in ("dims", "cone", "K", "f"):
        if key not in doc:
            problems.append(f"{key}: missing required field")
    if problems:
        raise ProblemFileError(problems)
    dims = doc["dims"]
    n, m = dims.get("n"), dims.get("m")
    if not isinstance(n, int) or n < 1:
        problems.append("dims.n: expected a positive integer")
    if not isinstance(m, int) or m < 1:
        problems.append("dims.m: expected a positive integer")
    if problems:
        raise ProblemFileError(problems)

    C = K = f = None
    try:
        C = cone_from_dict(doc["cone"])
        if C.dim != m:
            problems.append(f"cone.dim: {C.dim}, expected m = {m}")
    except (ValueError, KeyError, TypeError) as err:
        problems.append(f"cone: {err}")
    try:
        K = polyhedron_from_dict(doc["K"], n=n)
        if K.n != n:
            problems.append(f"K: dimension {K.n}, expected n = {n}")
    except (ValueError, KeyError, TypeError) as err:
        problems.append(f"K: {err}")
    fsrc = doc["f"]
    if isinstance(fsrc, str):
        fsrc = [s.strip() for s in fsrc.split(";")]
    if not isinstance(fsrc, list) or len(fsrc) != m:
        problems.append(f"f: expected a list of {m} expressions")
    else:
        comps = []
        for i, src in enumerate(fsrc):
            try:
                comps.append(parse([src], n_x=n, n_z=n, n_u=0))
            except ExprSyntaxError as err:
                problems.append(f"f[{i}]: {err}")
            except ValueError as err:
                problems.append(f"f[{i}]: {err}")
        if len(comps) == m:
            f = parse(list(fsrc), n_x=n, n_z=n, n_u=0)

    x_bar = None
    if doc.get("x_bar") is not None:
        x_bar = _vec(doc["x_bar"], "x_bar", n, problems)

    sampling = SamplingConfig()
    try:
        sd = dict(doc.get("sampling") or {})
        if seed is not None:
            sd["seed"] = int(seed)
        sampling = SamplingConfig.from_dict(sd)
    except (TypeError, ValueError) as err:
        problems.append(f"sampling: {err}")

    fam = None
    bd = doc.get("bderiv")
    if bd is not None:
        at = bd.get("at")
        base = None
        if at is not None:
            base = _vec(at, "bderiv.at", n, problems)
        elif x_bar is not None:
            base = x_bar
        elif K is not None:
            base = np.asarray(K.point, float)
        global_ = at is None
        try:
            if base is None:
                pass
            elif "matrix_exprs" in bd:
                me = bd["matrix_exprs"]
                if not isinstance(me, list) or len(me) != m:
                    problems.append(f"bderiv.matrix_exprs: expected {m} rows")
                else:
                    fam = DerivativeFamily.from_matrix_exprs(me, n, base, global_=global_)
            elif "map_exprs" in bd:
                me = bd["map_exprs"]
                if not isinstance(me, list) or len(me) != m:
                    problems.append(f"bderiv.map_exprs: expected {m} expressions")
                else:
                    fam = DerivativeFamily.from_map_exprs(me, n, base, global_=global_)
            else:
                problems.append("bderiv: needs matrix_exprs or map_exprs")
        except (ExprSyntaxError, ValueError) as err:
            problems.append(f"bderiv: {err}")

    obj = None
    od = doc.get("objective")
    if od is not None:
        try:
            obj = ScalarFn.from_source(od["expr"], n, od.get("structure", "generic"))
        except KeyError:
            problems.append("objective.expr: missing")
        except (ExprSyntaxError, ValueError) as err:
            problems.append(f"objective: {err}")

    if problems:
        raise ProblemFileError(problems)
    try:
        inst = VepInstance(n, m, C, K, f, fam, sampling, x_bar, str(doc.get("name", "vep")),
                           dict(doc.get("metadata") or {}))
    except ValueError as err:
        raise ProblemFileError(str(err).splitlines()) from None
    mp = None
    if obj is not None:
        xb = x_bar if x_bar is not None else np.asarray(K.point, float)
        mp = MpvecInstance(inst, obj, xb, inst.name, inst.metadata)
    return inst, mp


def instance_to_dict(inst, objective=None):
    """Serialise an instance back to the problem-file layout."""
    doc = {"format": FORMAT, "name": inst.name, "dims": {"n": inst.n, "m": inst.m},
           "cone": inst.C.to_dict(), "K": inst.K.to_dict(), "f": [to_source(c) for c in inst.f.components],
           "sampling": inst.sampling.to_dict()}
    if inst.x_bar is not None:
        doc["x_bar"] = np.asarray(inst.x_bar, float).tolist()
    fam = inst.deriv
    if fam is not None and fam.spec is not None:
        bd = {}
        if not fam.global_:
            bd["at"] = fam.base.tolist()
        if "matrix_exprs" in fam.spec:
            bd["matrix_exprs"] = fam.spec["matrix_exprs"]
        elif "map_exprs" in fam.spec:
            bd["map_exprs"] = fam.spec["map_exprs"]
        elif "matrix" in fam.spec:
            bd["matrix_exprs"] = [[repr(float(v)) for v in row] for row in fam.spec["matrix"]]
        doc["bderiv"] = bd
    if objective is not None:
        doc["objective"] = {"expr": objective.source, "structure": objective.structure}
    return doc
