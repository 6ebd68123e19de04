"""First-order optimality conditions for minimising a scalar objective over
the equilibrium set (MPVEC)."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .approx import (AnalysisContext, REPORT_SCHEMA, inner_cone, outer_cone, inner_rows,
                     homogenized_solve, c_concavity_check, _c_rows)
from .cones import ConvexCone, dist, dual, member, reduce_rows
from .deriv import ScalarFn, dini_many, subdiff_candidates
from .lp import linprog
from .problem import VepInstance
from .tangent import (ConeEstimate, contingent_cone_sampled, default_directions,
                      radial_cone_member, polyhedral_tangent)

MARGIN_REL = 1e-6
CORE_SCORE = 1e-6


@dataclass(frozen=True, eq=False)
class MpvecInstance:
    """minimise theta(x) subject to x in Equi."""

    vep: VepInstance
    objective: ScalarFn
    x_bar: np.ndarray
    name: str = "mpvec"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.objective.n != self.vep.n:
            raise ValueError(f"objective has {self.objective.n} variables but n = {self.vep.n}")


def _ctx(mp, ctx):
    ctx = ctx or AnalysisContext(mp.vep, mp.x_bar)
    ctx.require_equilibrium()
    return ctx


def _header(mp, kind, ctx):
    return {"schema": REPORT_SCHEMA, "kind": kind, "instance": mp.name,
            "x_bar": np.asarray(mp.x_bar, float).tolist(), "seed": mp.vep.sampling.seed,
            "objective": {"expr": mp.objective.source, "structure": mp.objective.structure}}


# ---------------------------------------------------------------- descent probes

def descent_probe(mp, which="contingent", ctx=None, directions=None, tol=1e-6):
    """Upper Dini (radial cone) or Dini-Hadamard (contingent cone) derivatives must be >= 0."""
    if which not in ("radial", "contingent"):
        raise ValueError("which must be 'radial' or 'contingent'")
    ctx = _ctx(mp, ctx)
    x_bar = np.asarray(mp.x_bar, float)
    U = default_directions(mp.vep.n) if directions is None else np.atleast_2d(directions)
    if which == "radial":
        W = np.array([u for u in U if radial_cone_member(ctx.oracle, x_bar, u)]).reshape(-1, mp.vep.n)
        mode = "dini_upper"
    else:
        est = contingent_cone_sampled(ctx.oracle, x_bar, U)
        # only directions scored as genuine members, not those admitted by the threshold band
        W = U[est.scores <= CORE_SCORE]
        mode = "dh_upper"
    out = {"which": which, "mode": mode, "n_directions": int(len(W))}
    if not len(W):
        out.update({"violated": False, "verdict": "vacuous (no nonzero directions)",
                    "witness": None, "unstable": []})
        return out
    vals, spread, _ = dini_many(mp.objective, x_bar, W, mode)
    unstable = spread > 1e-3 * (1 + np.abs(vals))
    k = int(np.argmin(vals))
    violated = bool(vals[k] < -tol)
    out.update({"violated": violated,
                "verdict": "necessary condition violated" if violated else "no violation",
                "witness": {"w": W[k].tolist(), "value": float(vals[k])} if violated else None,
                "min_value": float(vals[k]),
                "unstable": [W[i].tolist() for i in np.where(unstable)[0]]})
    return out


# ---------------------------------------------------------------- polar membership helpers

def _in_polar(cone, v, tol=1e-9):
    """Is v in the negative dual of ``cone`` (exact or sampled)?"""
    v = np.asarray(v, float)
    if isinstance(cone, ConvexCone):
        return member(dual(cone), v, tol=tol * (1 + np.linalg.norm(v)))
    M = cone.directions[cone.scores <= CORE_SCORE]
    return bool(np.all(M @ v <= tol * (1 + np.linalg.norm(v))))


def _theorem_note(holds_word, applicable):
    if applicable:
        return holds_word
    return f"{holds_word}, but the theorem is inapplicable (hypothesis probe failed)"


# ---------------------------------------------------------------- necessary condition

def noc_check(mp, ctx=None):
    """-(upper subdifferential) inside the negative dual of the inner cone."""
    ctx = _ctx(mp, ctx)
    x_bar = np.asarray(mp.x_bar, float)
    rep = _header(mp, "noc", ctx)
    hyp = ctx.probes.inner_hyp
    applicable = all(hyp.values())
    rep["hypotheses"] = hyp
    rep["theorem_applicable"] = applicable
    I = inner_cone(mp.vep, x_bar)
    rep["inner_cone"] = I.to_dict() if isinstance(I, ConvexCone) else {
        "representation": "sampled", "n_members": int((I.scores <= CORE_SCORE).sum())}
    if isinstance(I, ConvexCone):
        rep["dual_cone"] = dual(I).to_dict()
    cand = subdiff_candidates(mp.objective, x_bar, "upper")
    rep["upper_subdifferential"] = cand.to_dict()
    if cand.empty:
        rep.update({"verdict": "vacuous",
                    "message": "NOC vacuous: upper subdifferential is empty, no information",
                    "violating": None})
        return rep
    bad = [c for c in cand.points if not _in_polar(I, -c)]
    if bad:
        rep["verdict"] = "violated"
        rep["violating"] = np.asarray(bad[0]).tolist()
        rep["message"] = _theorem_note("NOC violated (x_bar is not a local minimiser)", applicable) \
            if applicable else "NOC violated, but the theorem is inapplicable (no conclusion)"
    else:
        rep["verdict"] = "holds"
        rep["violating"] = None
        rep["message"] = _theorem_note("NOC holds", applicable)
    rep["exact_subdifferential"] = cand.exact
    return rep


def noc_decomposed(mp, ctx=None):
    """Decomposed form: qualification LP, then -v in dual(intersection of Df^{-1}(C)) + N(x_bar, K)."""
    ctx = _ctx(mp, ctx)
    x_bar = np.asarray(mp.x_bar, float)
    inst = mp.vep
    rep = _header(mp, "noc-decomposed", ctx)
    base = noc_check(mp, ctx)
    rep["noc_check"] = {"verdict": base["verdict"], "message": base["message"]}
    fam = inst.deriv
    if fam is None or not fam.is_linear or _c_rows(inst) is None:
        rep.update({"qualification": {"passed": False, "reason": "needs a linear family and polyhedral C"},
                    "verdict": base["verdict"], "fallback": True,
                    "message": "qualification not testable; fell back to the undecomposed check"})
        return rep
    concave = c_concavity_check(fam, inst.C, inst.z_sample[:64])
    q = homogenized_solve(inst, x_bar)
    qual = q.margin > 1e-9 and q.direction is not None
    rep["c_concavity"] = concave
    rep["qualification"] = {"passed": bool(qual), **q.to_dict()}
    if not (qual and concave["passed"]):
        rep.update({"verdict": base["verdict"], "fallback": True,
                    "message": "qualification failed; fell back to the undecomposed check"})
        return rep
    # rows of the intersection of Df^{-1}(C) alone, and of K at x_bar
    rows = _c_rows(inst)
    M = fam.matrices(inst.z_sample)
    R = reduce_rows(np.einsum("rm,nmk->nrk", rows, M).reshape(-1, inst.n))
    A = polyhedral_tangent(inst.K, x_bar).rows
    cand = subdiff_candidates(mp.objective, x_bar, "upper")
    if cand.empty:
        rep.update({"verdict": "vacuous", "fallback": False, "agrees": base["verdict"] == "vacuous",
                    "message": "NOC vacuous: upper subdifferential is empty"})
        return rep
    G = np.hstack([-R.T, -A.T]) if A.shape[0] else -R.T
    k = G.shape[1]
    bad, decomps = None, []
    for c in cand.points:
        res = linprog(np.zeros(k), A_eq=G, b_eq=-np.asarray(c, float), bounds=[(0, None)] * k) \
            if k else None
        ok = bool(res is not None and res.success) or (k == 0 and np.allclose(c, 0))
        if not ok:
            bad = np.asarray(c).tolist()
            break
        lam = res.x if res is not None else np.zeros(0)
        u = -R.T @ lam[:R.shape[0]]
        decomps.append({"v": np.asarray(c).tolist(), "u": u.tolist(), "n": (-np.asarray(c) - u).tolist()})
    verdict = "violated" if bad is not None else "holds"
    rep.update({"verdict": verdict, "fallback": False, "violating": bad, "decompositions": decomps[:4],
                "agrees": verdict == base["verdict"],
                "message": "decomposition infeasible: NOC violated" if bad is not None
                else "decomposition feasible: NOC holds"})
    return rep


# ---------------------------------------------------------------- sufficient condition

def extreme_rays(A, n, tol=1e-10):
    """Extreme rays of the pointed cone {s : A s >= 0}; None if it contains a line."""
    A = np.atleast_2d(np.asarray(A, float)).reshape(-1, n)
    if A.shape[0] == 0 or np.linalg.matrix_rank(A, tol=1e-9) < n:
        return None
    if n == 1:
        return np.array([[1.0]]) if np.all(A[:, 0] >= -tol) else (
            np.array([[-1.0]]) if np.all(A[:, 0] <= tol) else np.zeros((0, 1)))
    rays = []
    for sub in itertools.combinations(range(A.shape[0]), n - 1):
        S = A[list(sub)]
        if np.linalg.matrix_rank(S, tol=1e-9) < n - 1:
            continue
        g = np.linalg.svd(S)[2][-1]
        for s in (1.0, -1.0):
            if np.all(A @ (s * g) >= -tol):
                rays.append(s * g)
    if not rays:
        return np.zeros((0, n))
    return np.unique(np.round(np.array(rays), 12), axis=0)


def interior_margin(O, v):
    """delta(v) = min over unit s in O of <v, s> (+inf for O = {0})."""
    v = np.asarray(v, float)
    if isinstance(O, ConeEstimate):
        M = O.directions[O.scores <= CORE_SCORE]
        return float(np.min(M @ v)) if len(M) else float("inf")
    rays = extreme_rays(O.rows, O.dim)
    if rays is None:
        # O contains a line L: the minimum over +-L is -|P_L v| <= 0
        A = O.rows
        if A.shape[0] == 0:
            return -float(np.linalg.norm(v))
        _, sv, Vt = np.linalg.svd(A)
        rank = int(np.sum(sv > 1e-9))
        L = Vt[rank:]
        return -float(np.linalg.norm(L @ v))
    if len(rays) == 0:
        return float("inf")
    best = float(np.min(rays @ v / np.linalg.norm(rays, axis=1)))
    if best >= 0:
        # s -> <v, s>/|s| is quasiconcave where it is nonnegative: minimum on a ray
        return best
    # otherwise -v makes an acute angle with O and the minimum is -|P_O(-v)|
    return -float(np.linalg.norm(dist(O, -v)[1]))


def _best_margin(O, cand_points):
    """Maximise delta over the convex hull of the candidates (LP over extreme-ray rows)."""
    P = np.atleast_2d(cand_points)
    if isinstance(O, ConvexCone):
        rays = extreme_rays(O.rows, O.dim)
        if rays is not None and len(rays) and len(P) > 1:
            Rn = rays / np.linalg.norm(rays, axis=1, keepdims=True)
            k = len(P)
            # variables (mu_1..mu_k, t): max t s.t. Rn (P^T mu) >= t, sum mu = 1, mu >= 0
            c = np.zeros(k + 1)
            c[-1] = -1.0
            A_ub = np.hstack([-(Rn @ P.T), np.ones((len(Rn), 1))])
            res = linprog(c, A_ub, np.zeros(len(Rn)), A_eq=np.concatenate([np.ones(k), [0.0]])[None],
                          b_eq=[1.0], bounds=[(0, None)] * k + [(None, None)])
            if res.success:
                v = P.T @ res.x[:k]
                return v, interior_margin(O, v)
    vals = [interior_margin(O, p) for p in P]
    j = int(np.argmax(vals))
    return P[j], vals[j]


def soc_check(mp, ctx=None, margin_rel=MARGIN_REL):
    """0 in (regular subdifferential) + int(negative dual of the outer cone)."""
    ctx = _ctx(mp, ctx)
    x_bar = np.asarray(mp.x_bar, float)
    rep = _header(mp, "soc", ctx)
    hyp = ctx.probes.outer_hyp
    applicable = all(hyp.values())
    rep["hypotheses"] = hyp
    rep["theorem_applicable"] = applicable
    O = outer_cone(mp.vep, x_bar)
    rep["outer_cone"] = O.to_dict() if isinstance(O, ConvexCone) else {
        "representation": "sampled", "n_members": int((O.scores <= CORE_SCORE).sum())}
    cand = subdiff_candidates(mp.objective, x_bar, "regular")
    rep["regular_subdifferential"] = cand.to_dict()
    if cand.empty:
        rep.update({"verdict": "inapplicable", "witness": None, "margin": None,
                    "message": "SOC inapplicable: regular subdifferential is empty, condition can never hold"})
        return rep
    v, delta = _best_margin(O, cand.points)
    thresh = margin_rel * (1 + np.linalg.norm(v))
    if delta > thresh:
        verdict = "holds"
        msg = _theorem_note("SOC holds: strict local min certified (modulo sampled hypotheses)", applicable)
    elif delta > 0:
        verdict = "indeterminate"
        msg = "SOC margin at the tie threshold: indeterminate"
    else:
        verdict = "fails"
        msg = "SOC fails: no regular subgradient lies in the interior of the dual cone"
    rep.update({"verdict": verdict, "witness": np.asarray(v).tolist(),
                "margin": None if not np.isfinite(delta) else float(delta),
                "margin_infinite": bool(np.isinf(delta) and delta > 0), "message": msg})
    return rep


# ---------------------------------------------------------------- ground truth

def local_min_brute(mp, ctx=None, radius=0.5, min_points=5, tol=1e-12):
    """Compare theta(x_bar) with theta on certified equilibria within ``radius``."""
    ctx = ctx or AnalysisContext(mp.vep, mp.x_bar)
    x_bar = np.asarray(mp.x_bar, float)
    P = ctx.oracle.points
    d = np.linalg.norm(P - x_bar, axis=1)
    near = P[(d <= radius) & (d > 1e-12)]
    out = {"radius": radius, "n_points": int(len(near))}
    if len(near) < min_points:
        G = ctx.oracle.grid_points
        examined = int(np.sum(np.linalg.norm(G - x_bar, axis=1) <= radius)) if len(G) else 0
        if len(near) == 0 and examined >= min_points:
            out.update({"verdict": "strict local min (isolated)", "strict": True, "local_min": True,
                        "examined": examined})
        else:
            out.update({"verdict": "inconclusive", "strict": None, "local_min": None,
                        "examined": examined})
        return out
    f0 = mp.objective(x_bar)
    diff = mp.objective(near) - f0
    scale = tol * (1 + abs(f0))
    k = int(np.argmin(diff))
    if diff[k] < -scale:
        out.update({"verdict": "not a local min", "strict": False, "local_min": False,
                    "witness": near[k].tolist()})
    elif np.all(diff > scale):
        out.update({"verdict": "strict local min", "strict": True, "local_min": True})
    else:
        out.update({"verdict": "local min", "strict": False, "local_min": True})
    return out
