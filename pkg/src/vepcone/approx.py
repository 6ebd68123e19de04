"""Inner and outer conical approximations of the contingent cone to the
equilibrium set, and their verification against a sampled contingent cone."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .cones import (ConvexCone, RepresentationError, dist_many, member_many, reduce_rows, tangent_cone_at,
                    interior_member, depth, MEMBER_TOL)
from .deriv import (MissingDerivativeError, uniformity_check, strictness_check,
                    equicontinuity_check)
from .lp import linprog, linprog_rows
from .problem import EquiOracle, error_bound_probe, DEFAULT_RADII
from .tangent import (ConeEstimate, contingent_cone_sampled, default_directions, estimate_from_mask,
                      polyhedral_tangent, score_against_cone, TAU_DIR)

log = logging.getLogger(__name__)

REPORT_SCHEMA = "vep-report/1"
INTERIOR_MARGIN = 1e-6

Cone = Union[ConvexCone, ConeEstimate]


class NotEquilibriumError(ValueError):
    """The reference point fails the equilibrium test (carries a witness z)."""

    def __init__(self, msg, witness=None):
        super().__init__(msg)
        self.witness = witness


class NoEquilibriaError(RuntimeError):
    pass


class FamilyBaseError(ValueError):
    """The derivative family is based at another point and cannot be moved."""


def _family(inst):
    if inst.deriv is None:
        raise MissingDerivativeError("instance has no derivative family")
    return inst.deriv


def _c_rows(inst):
    try:
        return inst.C.rows
    except RepresentationError:
        return None


def _check_base(inst, x_bar):
    x_bar = np.asarray(x_bar, float)
    fam = _family(inst)
    if not np.allclose(fam.base, x_bar, atol=1e-12, rtol=0) and not fam.global_:
        raise FamilyBaseError(f"derivative family is based at {fam.base.tolist()}, not at {x_bar.tolist()}")
    return fam if np.allclose(fam.base, x_bar, atol=1e-12, rtol=0) else fam.at_point(x_bar)


def _use_exact(fam, rows, path):
    exact_ok = fam.is_linear and rows is not None
    if path == "exact" and not exact_ok:
        raise ValueError("exact path needs a linear family and a polyhedral cone C")
    return exact_ok if path == "auto" else path == "exact"


def _member_tol(Y):
    return MEMBER_TOL * (1.0 + np.linalg.norm(Y, axis=-1))


# ---------------------------------------------------------------- inner cone

def inner_rows(inst, x_bar, Z=None, reduce=True):
    """Stacked halfspace rows A_C M_z over the z-sample plus K's active rows."""
    fam = _check_base(inst, x_bar)
    rows = _c_rows(inst)
    Z = inst.z_sample if Z is None else np.atleast_2d(Z)
    M = fam.matrices(Z)  # (N, m, n)
    R = np.einsum("rm,nmk->nrk", rows, M).reshape(-1, inst.n)
    R = np.vstack([R, polyhedral_tangent(inst.K, x_bar).rows])
    return reduce_rows(R) if reduce else R


def inner_cone(inst, x_bar, Z=None, directions=None, path="auto", tau=TAU_DIR) -> Cone:
    """Intersection over z of Df(x_bar, z)^{-1}(C), intersected with W(x_bar, K)."""
    x_bar = np.asarray(x_bar, float)
    fam = _check_base(inst, x_bar)
    rows = _c_rows(inst)
    if _use_exact(fam, rows, path):
        return ConvexCone.halfspaces(inner_rows(inst, x_bar, Z), dim=inst.n)
    Z = inst.z_sample if Z is None else np.atleast_2d(Z)
    U = default_directions(inst.n) if directions is None else np.atleast_2d(directions)
    Y = fam.apply(Z, U)  # (N, K, m)
    d = dist_many(inst.C, Y.reshape(-1, inst.m)).reshape(Y.shape[:2])
    ok = np.all(d <= _member_tol(Y), axis=0)
    T = polyhedral_tangent(inst.K, x_bar)
    ok &= member_many(T, U)
    return estimate_from_mask(U, ok, x_bar, "inner", tau)


# ---------------------------------------------------------------- outer cone

def _outer_pieces(inst, x_bar, Z):
    """Per-z tangent cones T(f(x_bar, z), C); interior values are skipped."""
    F = inst.f_batch(np.asarray(x_bar, float)[None], Z)[0]
    dC = dist_many(inst.C, F)
    tol = max(inst.tol_eq, 1e-9)
    bad = np.where(dC > tol * (1 + np.linalg.norm(F, axis=1)))[0]
    if len(bad):
        k = int(bad[np.argmax(dC[bad])])
        raise NotEquilibriumError(
            f"f(x_bar, z) is not in C for z = {Z[k].tolist()} (distance {dC[k]:.3g})",
            witness={"z": Z[k].tolist(), "f": F[k].tolist(), "dist": float(dC[k])})
    pieces = []
    skipped = 0
    for k in range(len(Z)):
        if inst.C.kind != "generators" and interior_member(inst.C, F[k], INTERIOR_MARGIN):
            skipped += 1
            continue
        T = tangent_cone_at(inst.C, F[k])
        if T.A.shape[0] == 0:
            skipped += 1
            continue
        pieces.append((k, T))
    return pieces, skipped


def outer_cone(inst, x_bar, Z=None, directions=None, path="auto", tau=TAU_DIR,
               return_stats=False) -> Cone:
    """Intersection over z of Df(x_bar,z)^{-1}(T(f(x_bar,z), C)), intersected with T(x_bar, K)."""
    x_bar = np.asarray(x_bar, float)
    Z = inst.z_sample if Z is None else np.atleast_2d(Z)
    # the equilibrium test first: it is the more informative failure
    pieces, skipped = _outer_pieces(inst, x_bar, Z)
    fam = _check_base(inst, x_bar)
    rows = _c_rows(inst)
    TK = polyhedral_tangent(inst.K, x_bar)
    stats = {"z_total": int(len(Z)), "z_interior_skipped": int(skipped)}
    if _use_exact(fam, rows, path):
        blocks = [TK.rows]
        if pieces:
            idx = np.array([k for k, _ in pieces])
            M = fam.matrices(Z[idx])
            for (k, T), Mk in zip(pieces, M):
                blocks.append(T.A @ Mk)
        out = ConvexCone.halfspaces(reduce_rows(np.vstack(blocks)), dim=inst.n)
    else:
        U = default_directions(inst.n) if directions is None else np.atleast_2d(directions)
        ok = member_many(TK, U)
        if pieces:
            idx = np.array([k for k, _ in pieces])
            Y = fam.apply(Z[idx], U)
            for (k, T), Yk in zip(pieces, Y):
                ok &= member_many(T, Yk, _member_tol(Yk))
        out = estimate_from_mask(U, ok, x_bar, "outer", tau)
    return (out, stats) if return_stats else out


# ---------------------------------------------------------------- helpers on cones

def as_estimate(cone: Cone, U, base, notion, tau=TAU_DIR) -> ConeEstimate:
    if isinstance(cone, ConeEstimate):
        return cone
    return score_against_cone(cone, U, tau, base, notion)


def cone_to_dict(cone: Cone):
    if isinstance(cone, ConvexCone):
        d = cone.to_dict()
        d["representation"] = "exact"
        return d
    d = cone.to_dict()
    d["representation"] = "sampled"
    return d


def angular_width_2d(cone: ConvexCone):
    """Opening angle (radians) of a pointed 2-d cone given by halfspaces; None otherwise."""
    if cone.dim != 2:
        return None
    U = default_directions(2, 3600)
    inside = dist_many(cone, U) <= 1e-12
    if not np.any(inside):
        return 0.0
    if np.all(inside):
        return 2 * np.pi
    try:
        G = cone.to_generators().G
    except RepresentationError:
        return None
    if G.shape[1] == 0:
        return 0.0
    ang = np.arctan2(G[1], G[0])
    best = 0.0
    for i in range(len(ang)):
        for j in range(len(ang)):
            d = abs((ang[i] - ang[j] + np.pi) % (2 * np.pi) - np.pi)
            best = max(best, d)
    return float(best)


# ---------------------------------------------------------------- homogenized problem

@dataclass
class HomogenizedResult:
    direction: Optional[np.ndarray]
    margin: float
    status: str

    def to_dict(self):
        return {"direction": None if self.direction is None else self.direction.tolist(),
                "margin": self.margin, "status": self.status}


def _normalised_image_rows(inst, fam, Z, x_bar):
    rows = _c_rows(inst)
    rn = rows / np.linalg.norm(rows, axis=1, keepdims=True)
    M = fam.matrices(Z)
    R = np.einsum("rm,nmk->nrk", rn, M).reshape(-1, inst.n)
    TK = polyhedral_tangent(inst.K, x_bar).rows
    if TK.shape[0]:
        TK = TK / np.linalg.norm(TK, axis=1, keepdims=True)
    return R, TK


def homogenized_solve(inst, x_bar, v0=None, Z=None, tol=1e-10):
    """Maximal-margin direction v with Df(x_bar, z)(v) in C for all sampled z and v in W(x_bar, K).

    Linear/polyhedral case: LP  max s  s.t.  a_i M_z v >= s |a_i|, (active K rows) v >= s,
    |v|_inf <= 1.  A positive margin also certifies v in int T(x_bar, K).  Returns no
    direction when the cone is {0}.
    """
    x_bar = np.asarray(x_bar, float)
    fam = _check_base(inst, x_bar)
    Z = inst.z_sample if Z is None else np.atleast_2d(Z)
    n = inst.n
    if fam.is_linear and _c_rows(inst) is not None:
        R, TK = _normalised_image_rows(inst, fam, Z, x_bar)
        A = np.vstack([R, TK])
        if len(A):
            _, idx = np.unique(np.round(A, 12), axis=0, return_index=True)
            A = A[np.sort(idx)]
        c = np.zeros(n + 1)
        c[-1] = -1.0
        A_ub = np.hstack([-A, np.ones((len(A), 1))]) if len(A) else None
        b_ub = np.zeros(len(A)) if len(A) else None
        bounds = [(-1.0, 1.0)] * n + [(None, 1.0)]
        res = linprog_rows(c, A_ub, b_ub, bounds) if A_ub is not None else linprog(c, bounds=bounds)
        if not res.success:
            return HomogenizedResult(None, float("nan"), res.status)
        v, s = res.x[:n], float(res.x[-1])
        if s > tol and np.linalg.norm(v) > tol:
            return HomogenizedResult(v / np.linalg.norm(v), s, "optimal")
        v = _nonzero_member(A, n, v0)
        if v is None:
            return HomogenizedResult(None, 0.0, "zero cone")
        return HomogenizedResult(v / np.linalg.norm(v), 0.0, "boundary")
    # sampled search over the sphere grid
    U = default_directions(n)
    if v0 is not None:
        U = np.vstack([np.asarray(v0, float) / np.linalg.norm(v0), U])
    TK = polyhedral_tangent(inst.K, x_bar)
    U = U[member_many(TK, U)]
    if not len(U):
        return HomogenizedResult(None, 0.0, "zero cone")
    Y = fam.apply(Z, U)
    score = np.min(depth(inst.C, Y), axis=0)
    k = int(np.argmax(score))
    if score[k] < -1e-9:
        return HomogenizedResult(None, float(score[k]), "infeasible")
    return HomogenizedResult(U[k], max(float(score[k]), 0.0), "sampled")


def _nonzero_member(A, n, v0):
    """Some nonzero v with A v >= 0, via coordinate-objective LPs."""
    objectives = []
    if v0 is not None:
        objectives.append(np.asarray(v0, float))
    objectives += [s * e for e in np.eye(n) for s in (1.0, -1.0)]
    for c in objectives:
        if len(A):
            res = linprog_rows(-c, -A, np.zeros(len(A)), bounds=[(-1.0, 1.0)] * n)
        else:
            res = linprog(-c, bounds=[(-1.0, 1.0)] * n)
        if res.success and -res.fun > 1e-9:
            return res.x
    return None


def c_concavity_check(family, C, Z, n_pairs=256, seed=0, tol=1e-9):
    """Sampled test of Df(v1) + Df(v2) <=_C Df(v1 + v2)."""
    rng = np.random.default_rng(seed)
    n = family.n
    V1 = rng.standard_normal((n_pairs, n))
    V2 = rng.standard_normal((n_pairs, n))
    V2[: n_pairs // 8] = -V1[: n_pairs // 8]  # include opposite pairs
    Z = np.atleast_2d(Z)
    D = family.apply(Z, V1 + V2) - family.apply(Z, V1) - family.apply(Z, V2)
    d = dist_many(C, D.reshape(-1, family.m)).reshape(D.shape[:2])
    k = np.unravel_index(int(np.argmax(d)), d.shape)
    worst = float(d[k])
    ok = worst <= tol * (1 + float(np.max(np.abs(D))))
    return {"passed": bool(ok), "worst_violation": worst,
            "witness": None if ok else {"z": Z[k[0]].tolist(), "v1": V1[k[1]].tolist(),
                                        "v2": V2[k[1]].tolist()}}


# ---------------------------------------------------------------- verification report

@dataclass
class AnalysisReport:
    instance: str
    x_bar: list
    seed: int
    sampling: dict
    hypotheses: dict = field(default_factory=dict)
    cones: dict = field(default_factory=dict)
    inclusions: dict = field(default_factory=dict)
    corollary: dict = field(default_factory=dict)
    sensitivity: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    @property
    def demoted(self):
        return any(self.inclusions.get(k, {}).get("status") == "informational"
                   for k in ("inner", "outer"))

    def to_dict(self):
        return {"schema": REPORT_SCHEMA, "kind": "verify", "instance": self.instance,
                "x_bar": self.x_bar, "seed": self.seed, "sampling": self.sampling,
                "hypotheses": self.hypotheses, "cones": self.cones,
                "inclusions": self.inclusions, "corollary": self.corollary,
                "sensitivity": self.sensitivity, "flags": self.flags}


@dataclass
class HypothesisProbes:
    """Shared diagnostic probes (computed once per instance and base point)."""

    uniform: dict
    strict: dict
    equicontinuity: dict
    error_bound: dict
    f_zero: dict

    @property
    def inner_hyp(self):
        return {"uniform_B_differentiability": self.uniform["consistent"],
                "local_error_bound": self.error_bound["holds"]}

    @property
    def outer_hyp(self):
        return {"strict_B_differentiability": self.strict["consistent"],
                "equicontinuity": self.equicontinuity["consistent"]}

    @property
    def equality_hyp(self):
        return {"K_polyhedral": True, "f_vanishes_at_x_bar": self.f_zero["passed"],
                "strict_B_differentiability": self.strict["consistent"],
                "equicontinuity": self.equicontinuity["consistent"],
                "local_error_bound": self.error_bound["holds"]}

    def to_dict(self):
        return {"uniform": self.uniform, "strict": self.strict, "equicontinuity": self.equicontinuity,
                "error_bound": self.error_bound, "f_vanishes": self.f_zero,
                "theorem_inner": self.inner_hyp, "theorem_outer": self.outer_hyp, "corollary": self.equality_hyp}


def run_hypothesis_probes(inst, x_bar, oracle, radii=DEFAULT_RADII) -> HypothesisProbes:
    x_bar = np.asarray(x_bar, float)
    fam = _check_base(inst, x_bar)
    Z = inst.z_sample
    uni = uniformity_check(inst, fam, x_bar).to_dict()
    strict = strictness_check(inst, fam, x_bar).to_dict()
    eq = equicontinuity_check(fam, Z).to_dict()
    eb = error_bound_probe(oracle, x_bar, radii)
    ebd = eb.to_dict()
    ebd["holds"] = eb.holds
    F = inst.f_batch(x_bar[None], Z)[0]
    fmax = float(np.max(np.linalg.norm(F, axis=1)))
    fz = {"passed": fmax <= inst.tol_eq, "max_norm": fmax}
    return HypothesisProbes(uni, strict, eq, ebd, fz)


def _witness_dirs(U, mask, limit=5):
    return [[float(c) for c in u] for u in U[mask][:limit]]


def verify_inclusions(inst, x_bar, oracle: Optional[EquiOracle] = None, directions=None,
                      tau=TAU_DIR, radii=DEFAULT_RADII, probes: Optional[HypothesisProbes] = None,
                      path="auto", sensitivity=True) -> AnalysisReport:
    """Check inner(x_bar) subset of T_hat(x_bar, Equi) subset of outer(x_bar) on a sphere grid."""
    x_bar = np.asarray(x_bar, float)
    oracle = oracle or EquiOracle(inst)
    rep = AnalysisReport(inst.name, x_bar.tolist(), inst.sampling.seed, inst.sampling.to_dict())
    rep.sampling["tol_eq"] = inst.tol_eq
    rep.sampling["z_count"] = int(len(inst.z_sample))
    if len(oracle.points) == 0:
        rep.flags.append("no certified equilibria")
        raise NoEquilibriaError("no certified equilibria in the sampling region")
    if not oracle.contains(x_bar):
        raise NotEquilibriumError(f"x_bar = {x_bar.tolist()} is not a certified equilibrium")
    U = default_directions(inst.n) if directions is None else np.atleast_2d(directions)

    I = inner_cone(inst, x_bar, directions=U, path=path, tau=tau)
    O, ostats = outer_cone(inst, x_bar, directions=U, path=path, tau=tau, return_stats=True)
    T = contingent_cone_sampled(oracle, x_bar, U, tau=tau)
    Ie = as_estimate(I, U, x_bar, "inner", tau)
    Oe = as_estimate(O, U, x_bar, "outer", tau)
    iv, ov, tv = Ie.verdicts, Oe.verdicts, T.verdicts
    guard = T.indeterminate

    probes = probes or run_hypothesis_probes(inst, x_bar, oracle, radii)
    rep.hypotheses = probes.to_dict()
    rep.cones = {"inner": cone_to_dict(I), "outer": cone_to_dict(O),
                 "contingent": {"n_members": int(tv.sum()), "tau": tau,
                                "resolution": T.resolution, "guard": T.guard,
                                "members": _witness_dirs(U, tv, limit=len(U)),
                                "smallest_t_flags": int(np.sum(T.trend))},
                 "outer_stats": ostats}
    if isinstance(I, ConvexCone):
        w = angular_width_2d(I)
        rep.cones["inner"]["angular_width"] = w

    def inclusion(sub, sup, hyp, name):
        viol = sub & ~sup & ~guard
        strict = sup & ~sub & ~guard
        passes = all(hyp.values())
        status = "asserted" if passes else "informational"
        return {"status": status, "hypotheses_pass": passes,
                "holds": bool(not viol.any()), "violations": _witness_dirs(U, viol),
                "strict": bool(strict.any()), "strict_witnesses": _witness_dirs(U, strict),
                "indeterminate": int(guard.sum()), "name": name}

    rep.inclusions["inner"] = inclusion(iv, tv, probes.inner_hyp, "inner subset of contingent")
    rep.inclusions["outer"] = inclusion(tv, ov, probes.outer_hyp, "contingent subset of outer")
    for key, inc in rep.inclusions.items():
        if inc["status"] == "informational":
            rep.flags.append(f"{key} inclusion demoted to informational (hypothesis failed)")
        elif not inc["holds"]:
            rep.flags.append(f"{key} inclusion violated on the direction grid")
        if inc["strict"]:
            rep.flags.append(f"{key} inclusion strict")

    cor_ok = all(probes.equality_hyp.values())
    eq_all = bool(np.all((iv == tv) | guard) and np.all((tv == ov) | guard))
    rep.corollary = {"hypotheses": probes.equality_hyp, "applicable": cor_ok,
                     "status": "asserted" if cor_ok else "not applicable",
                     "equal_on_grid": eq_all,
                     "mismatch_inner": _witness_dirs(U, (iv != tv) & ~guard),
                     "mismatch_outer": _witness_dirs(U, (tv != ov) & ~guard)}
    if cor_ok and not eq_all:
        rep.flags.append("corollary equality violated on the direction grid")

    if sensitivity and isinstance(I, ConvexCone):
        R = inst.sampling.R_z
        Z2 = inst.z_sample_sized(R_z=2 * R)
        I2 = inner_cone(inst, x_bar, Z=Z2, path="exact")
        rep.sensitivity = {"R_z": R, "inner_angular_width": angular_width_2d(I),
                           "R_z_doubled": 2 * R, "inner_angular_width_doubled": angular_width_2d(I2),
                           "inner_rows_doubled": I2.A.tolist()}
    return rep


class AnalysisContext:
    """Lazily computed, shared pieces of an analysis at one reference point."""

    def __init__(self, inst, x_bar=None, oracle=None, radii=DEFAULT_RADII):
        self.inst = inst
        self.x_bar = inst.reference_point if x_bar is None else np.asarray(x_bar, float)
        self._oracle = oracle
        self.radii = tuple(radii)
        self._probes = None

    @property
    def oracle(self):
        if self._oracle is None:
            self._oracle = EquiOracle(self.inst, center=self.x_bar)
        return self._oracle

    @property
    def probes(self) -> HypothesisProbes:
        if self._probes is None:
            self._probes = run_hypothesis_probes(self.inst, self.x_bar, self.oracle, self.radii)
        return self._probes

    def require_equilibrium(self):
        if len(self.oracle.points) == 0:
            raise NoEquilibriaError("no certified equilibria in the sampling region")
        if not self.oracle.contains(self.x_bar):
            raise NotEquilibriumError(f"x_bar = {self.x_bar.tolist()} is not a certified equilibrium")

    def verify(self, **kw):
        return verify_inclusions(self.inst, self.x_bar, self.oracle, probes=self.probes,
                                 radii=self.radii, **kw)
