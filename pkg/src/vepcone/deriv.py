"""Generalised derivatives: B-derivative families of bifunctions, their
uniformity/strictness diagnostics, composition rules, Dini-type directional
derivatives and upper/regular subdifferential membership."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .expr import ExprVector, parse, to_source
from .grids import sphere_grid

log = logging.getLogger(__name__)

FD_STEPS = (1e-2, 1e-3, 1e-4)
FD_FLAG_TOL = 1e-3
EPS_GRID = (1e-1, 1e-2, 1e-3)


class MissingDerivativeError(ValueError):
    pass


# ---------------------------------------------------------------- p.h. maps

@dataclass(frozen=True, eq=False)
class PHMap:
    """Positively homogeneous map R^n -> R^m: a matrix, or a vectorised callable."""

    n: int
    m: int
    matrix: Optional[np.ndarray] = None
    func: Optional[Callable] = None  # (K, n) -> (K, m)

    @property
    def is_linear(self):
        return self.matrix is not None

    def __call__(self, u):
        U = np.asarray(u, float)
        single = U.ndim == 1
        U = np.atleast_2d(U)
        out = U @ self.matrix.T if self.is_linear else self.func(U)
        return out[0] if single else out

    def norm(self, count=256):
        """Sampled sup of |h(u)| over the unit sphere."""
        return float(np.max(np.linalg.norm(self(sphere_grid(self.n, count)), axis=1)))


# ---------------------------------------------------------------- families

@dataclass(frozen=True, eq=False)
class DerivativeFamily:
    """A z-indexed family of p.h. maps ``Df(base, z)``.

    Linear families supply ``matrices_fn(Z) -> (N, m, n)``; general ones supply
    ``apply_fn(Z, U) -> (N, K, m)``.  ``global_`` marks families whose
    expressions are valid at every base point (x enters the expressions).
    """

    n: int
    m: int
    base: np.ndarray
    provenance: str = "analytic"
    matrices_fn: Optional[Callable] = None
    apply_fn: Optional[Callable] = None
    global_: bool = False
    rebase: Optional[Callable] = None
    warnings: tuple = ()
    spec: Optional[dict] = None  # serialisable description, when there is one

    @property
    def is_linear(self):
        return self.matrices_fn is not None

    def matrices(self, Z):
        if not self.is_linear:
            raise TypeError("family is not linear")
        return self.matrices_fn(np.atleast_2d(Z))

    def apply(self, Z, U):
        """``Df(base, z_k)(u_j)`` for every pair: returns (N, K, m)."""
        Z = np.atleast_2d(np.asarray(Z, float))
        U = np.atleast_2d(np.asarray(U, float))
        if self.is_linear:
            return np.einsum("nij,kj->nki", self.matrices(Z), U)
        return self.apply_fn(Z, U)

    def at(self, z) -> PHMap:
        z = np.asarray(z, float)
        if self.is_linear:
            return PHMap(self.n, self.m, matrix=self.matrices(z[None])[0])
        return PHMap(self.n, self.m, func=lambda U: self.apply(z[None], U)[0])

    def __call__(self, z, u):
        return self.at(z)(u)

    def at_point(self, x0):
        if self.rebase is None:
            raise MissingDerivativeError("family cannot be moved to another base point")
        return self.rebase(np.asarray(x0, float))

    # ------------------------------------------------------------ constructors
    @classmethod
    def from_matrix_exprs(cls, entries, n, base, global_=False):
        """Family from an m x n matrix of expressions in z (and in x when global)."""
        m = len(entries)
        if any(len(r) != n for r in entries):
            raise ValueError(f"bderiv.matrix_exprs: every row must have {n} entries")
        flat = [e for row in entries for e in row]
        ev = parse(flat, n_x=n, n_z=n, n_u=0)
        if ev.uses("u"):
            raise ValueError("bderiv.matrix_exprs: matrix entries may not use u variables")
        if ev.uses("x") and not global_:
            raise ValueError("bderiv.matrix_exprs: x variables need a family without a fixed 'at' point")
        base = np.asarray(base, float)

        def build(b):
            def mats(Z):
                env = {"x": [np.float64(v) for v in b], "z": [Z[:, j] for j in range(n)], "u": []}
                comps = ev.evaluate_batch(env)
                M = np.stack([np.broadcast_to(c, (Z.shape[0],)) for c in comps], axis=-1)
                return M.reshape(Z.shape[0], m, n).astype(float)

            return cls(n, m, b, "analytic", matrices_fn=mats, global_=global_,
                       rebase=build if global_ else None,
                       spec={"matrix_exprs": [list(r) for r in entries]})

        return build(base)

    @classmethod
    def from_map_exprs(cls, exprs, n, base, global_=False):
        """Family from m expressions in (u, z), positively homogeneous in u."""
        ev = parse(list(exprs), n_x=n, n_z=n, n_u=n)
        if ev.uses("x") and not global_:
            raise ValueError("bderiv.map_exprs: x variables need a family without a fixed 'at' point")
        m = ev.dim
        base = np.asarray(base, float)

        def build(b):
            def app(Z, U):
                env = {"x": [np.float64(v) for v in b],
                       "z": [Z[:, j][:, None] for j in range(n)],
                       "u": [U[:, i][None, :] for i in range(n)]}
                comps = ev.evaluate_batch(env)
                shape = (Z.shape[0], U.shape[0])
                return np.stack([np.broadcast_to(c, shape) for c in comps], axis=-1).astype(float)

            return cls(n, m, b, "analytic", apply_fn=app, global_=global_,
                       rebase=build if global_ else None, spec={"map_exprs": list(exprs)})

        return build(base)

    @classmethod
    def constant(cls, M, base, provenance="analytic"):
        M = np.asarray(M, float)
        m, n = M.shape

        def build(b):
            return cls(n, m, b, provenance,
                       matrices_fn=lambda Z: np.broadcast_to(M, (Z.shape[0], m, n)).copy(),
                       global_=True, rebase=build, spec={"matrix": M.tolist()})

        return build(np.asarray(base, float))

    @classmethod
    def zero(cls, n, m, base):
        return cls.constant(np.zeros((m, n)), base)

    @classmethod
    def from_callable(cls, fn, n, m, base, provenance="analytic"):
        """``fn(z, u) -> R^m`` evaluated pointwise (slow path, for tests and templates)."""

        def app(Z, U):
            return np.array([[np.asarray(fn(z, u), float) for u in U] for z in Z]).reshape(len(Z), len(U), m)

        return cls(n, m, np.asarray(base, float), provenance, apply_fn=app)

    def to_dict(self):
        out = {"provenance": self.provenance, "base": self.base.tolist(), "linear": self.is_linear}
        if self.spec:
            out.update(self.spec)
        return out


def family_at(inst, x0):
    """The instance's family at ``x0``: the declared one when it applies there,
    finite differences otherwise."""
    fam = inst.deriv
    if fam is None:
        raise MissingDerivativeError("instance has no derivative family")
    x0 = np.asarray(x0, float)
    if np.allclose(fam.base, x0, atol=1e-14, rtol=0):
        return fam
    if fam.global_:
        return fam.at_point(x0)
    return fd_family(inst, x0)


# ---------------------------------------------------------------- finite differences

@dataclass
class FDResult:
    value: np.ndarray
    dispersion: float
    flagged: bool

    @property
    def message(self):
        return "possibly not B-differentiable here" if self.flagged else "ok"


def _neville_at_zero(ts, vals):
    """Value at t = 0 of the polynomial through (ts[i], vals[i]); also the previous order."""
    P = [np.asarray(v, float) for v in vals]
    k = len(ts)
    prev = P[-1]
    for lvl in range(1, k):
        prev = P[-1]
        P = [(ts[i + lvl] * P[i] - ts[i] * P[i + 1]) / (ts[i + lvl] - ts[i]) for i in range(k - lvl)]
    return P[0], prev


def fd_apply(inst, x_bar, Z, U, steps=FD_STEPS):
    """Extrapolated one-sided differences for all (z, u): values (N, K, m), dispersion (N, K)."""
    x_bar = np.asarray(x_bar, float)
    Z = np.atleast_2d(Z)
    U = np.atleast_2d(U)
    ts = list(steps)
    F0 = inst.f_batch(x_bar[None], Z)[0]  # (N, m)
    quots = []
    for t in ts:
        Ft = inst.f_batch(x_bar + t * U, Z)  # (K, N, m)
        quots.append((Ft - F0[None]) / t)
    if len(ts) == 1:
        val, prev = quots[0], quots[0]
    else:
        val, prev = _neville_at_zero(ts, quots)
    disp = np.linalg.norm(val - prev, axis=-1) / (1.0 + np.linalg.norm(val, axis=-1))
    return np.transpose(val, (1, 0, 2)), disp.T


def fd_bderivative(inst, x_bar, z, u, steps=FD_STEPS) -> FDResult:
    """Richardson-extrapolated one-sided difference quotient of f(., z) at x_bar along u."""
    u = np.asarray(u, float)
    if not np.any(u):
        raise ValueError("direction u must be nonzero")
    val, disp = fd_apply(inst, x_bar, np.asarray(z, float)[None], u[None], steps)
    d = float(disp[0, 0])
    return FDResult(val[0, 0], d, d > FD_FLAG_TOL)


def fd_family(inst, x_bar, steps=FD_STEPS):
    """Finite-difference stand-in for a B-derivative family (p.h. by construction)."""
    x_bar = np.asarray(x_bar, float)

    def app(Z, U):
        norms = np.linalg.norm(U, axis=1)
        out = np.zeros((Z.shape[0], U.shape[0], inst.m))
        nz = norms > 0
        if np.any(nz):
            val, _ = fd_apply(inst, x_bar, Z, U[nz] / norms[nz, None], steps)
            out[:, nz] = val * norms[nz][None, :, None]
        return out

    return DerivativeFamily(inst.n, inst.m, x_bar, "finite-difference", apply_fn=app)


def homogeneity_defect(family, Z, U, ts=(0.5, 2.0, 10.0)):
    """Largest relative violation of Df(tu) = t Df(u) over the samples (plus |Df(0)|)."""
    base = family.apply(Z, U)
    worst = float(np.max(np.abs(family.apply(Z, np.zeros((1, family.n))))))
    for t in ts:
        scaled = family.apply(Z, t * U)
        err = np.abs(scaled - t * base) / (1.0 + np.abs(t * base))
        worst = max(worst, float(err.max()))
    return worst


# ---------------------------------------------------------------- uniformity / strictness

@dataclass
class DiagnosticReport:
    kind: str
    eps_grid: list
    levels: list
    quotients: list
    deltas: list
    consistent: bool
    witnesses: list = field(default_factory=list)

    @property
    def label(self):
        word = {"uniform": "uniform B-differentiability",
                "strict": "strict B-differentiability uniformly in z",
                "equicontinuity": "equicontinuity of the family (evidence)"}[self.kind]
        return ("consistent with " if self.consistent else "inconsistent with ") + word

    def to_dict(self):
        return {"kind": self.kind, "label": self.label, "consistent": self.consistent,
                "eps_grid": list(self.eps_grid), "delta": list(self.deltas),
                "levels": list(self.levels), "quotients": list(self.quotients),
                "witnesses": self.witnesses}


def _deltas(levels, quots, eps_grid):
    out = []
    for eps in eps_grid:
        d = 0.0
        # levels decrease; walk from the smallest up while the quotient stays below eps
        for s, q in zip(reversed(levels), reversed(quots)):
            if q < eps:
                d = s
            else:
                break
        out.append(d)
    return out


def _s_levels(count, s0=1e-1):
    return [s0 * 0.5 ** k for k in range(count)]


def uniformity_check(inst, family, x_bar, eps_grid=EPS_GRID, n_dirs=64, levels=20, Z=None):
    """sup_z |f(x,z) - f(x_bar,z) - Df(x_bar,z)(x - x_bar)| / |x - x_bar| on shrinking spheres."""
    x_bar = np.asarray(x_bar, float)
    Z = inst.z_sample if Z is None else Z
    U = sphere_grid(inst.n, n_dirs)
    DU = family.apply(Z, U)  # (N, K, m)
    F0 = inst.f_batch(x_bar[None], Z)[0]
    ss = _s_levels(levels)
    quots, wit = [], []
    for s in ss:
        F = inst.f_batch(x_bar + s * U, Z)  # (K, N, m)
        R = np.linalg.norm(F - F0[None] - s * np.transpose(DU, (1, 0, 2)), axis=-1) / s
        k, j = np.unravel_index(int(np.argmax(R)), R.shape)
        quots.append(float(R[k, j]))
        wit.append({"s": s, "u": U[k].tolist(), "z": Z[j].tolist(), "quotient": float(R[k, j])})
    deltas = _deltas(ss, quots, eps_grid)
    return DiagnosticReport("uniform", list(eps_grid), ss, quots, deltas,
                            all(d > 0 for d in deltas), wit)


def strictness_check(inst, family, x_bar, eps_grid=EPS_GRID, n_dirs=16, levels=16, Z=None):
    """Pair version: |f(x1,z) - f(x2,z) - Df(x_bar,z)(x1 - x2)| / |x1 - x2| for x1, x2 near x_bar."""
    x_bar = np.asarray(x_bar, float)
    Z = inst.z_sample if Z is None else Z
    A = sphere_grid(inst.n, n_dirs)
    B = np.vstack([A, 0.5 * A, np.zeros((1, inst.n))])
    D = A[:, None, :] - B[None, :, :]  # (Ka, Kb, n)
    dn = np.linalg.norm(D, axis=-1)
    valid = dn > 1e-12
    Dunit = np.where(valid[..., None], D / np.where(valid, dn, 1.0)[..., None], 0.0)
    DF = family.apply(Z, Dunit.reshape(-1, inst.n))  # (N, Ka*Kb, m)
    DF = np.transpose(DF, (1, 0, 2)).reshape(len(A), len(B), len(Z), inst.m)
    ss = _s_levels(levels)
    quots, wit = [], []
    for s in ss:
        Fa = inst.f_batch(x_bar + s * A, Z)  # (Ka, N, m)
        Fb = inst.f_batch(x_bar + s * B, Z)  # (Kb, N, m)
        diff = Fa[:, None] - Fb[None, :] - (s * dn)[..., None, None] * DF
        R = np.linalg.norm(diff, axis=-1) / np.where(valid, s * dn, 1.0)[..., None]
        R[~valid] = 0.0
        a, b, j = np.unravel_index(int(np.argmax(R)), R.shape)
        quots.append(float(R[a, b, j]))
        wit.append({"s": s, "x1": (x_bar + s * A[a]).tolist(), "x2": (x_bar + s * B[b]).tolist(),
                    "z": Z[j].tolist(), "quotient": float(R[a, b, j])})
    deltas = _deltas(ss, quots, eps_grid)
    return DiagnosticReport("strict", list(eps_grid), ss, quots, deltas,
                            all(d > 0 for d in deltas), wit)


def equicontinuity_check(family, Z, etas=(1e-1, 1e-2, 1e-3, 1e-4), n_dirs=32, n_perturb=16, seed=0):
    """Sampled modulus w(eta) = max |Df_z(u + eta xi) - Df_z(u)| over z, |u| <= 2, |xi| = 1.

    Reported as evidence when the modulus decays at least linearly in eta
    (up to a factor 10 across the tested range).
    """
    n = family.n
    S = sphere_grid(n, n_dirs)
    P = np.vstack([np.zeros((1, n)), 0.5 * S, S, 2.0 * S])
    Xi = sphere_grid(n, n_perturb, seed=seed)
    base = family.apply(Z, P)  # (N, P, m)
    omegas, wit = [], []
    for eta in etas:
        w, arg = 0.0, None
        for xi in Xi:
            d = np.linalg.norm(family.apply(Z, P + eta * xi) - base, axis=-1)
            k = int(np.argmax(d))
            if d.flat[k] > w:
                j, p = np.unravel_index(k, d.shape)
                w, arg = float(d.flat[k]), {"z": Z[j].tolist(), "u": P[p].tolist(), "xi": xi.tolist()}
        omegas.append(w)
        wit.append(arg)
    ratio = etas[-1] / etas[0]
    consistent = omegas[-1] <= 10.0 * ratio * omegas[0] + 1e-12
    return DiagnosticReport("equicontinuity", list(etas), list(etas), omegas,
                            [float(e) for e in etas], bool(consistent), wit)


# ---------------------------------------------------------------- construction rules

def compose_family(rule, **parts):
    """Families from the separable, factorable and composition templates.

    separable:   f(x,z) = f1(x) + f2(z); parts ``df1`` (m x n matrix), ``base``.
    factorable:  f(x,z) = alpha(z) g(x); parts ``alpha`` (Z -> (N,)), ``dg`` (m x n), ``base``,
                 optional ``Z`` sample for the boundedness check.
    composition: g o h; parts ``inner`` (family of h), ``inner_values`` (Z -> h(base, z), (N, p)),
                 ``jacobian`` (Y (N, p) -> (N, m, p)).
    """
    if rule == "separable":
        return DerivativeFamily.constant(parts["df1"], parts["base"])
    if rule == "factorable":
        dg = np.asarray(parts["dg"], float)
        m, n = dg.shape
        alpha = parts["alpha"]
        warns = []
        if parts.get("Z") is not None:
            a = np.asarray(alpha(np.atleast_2d(parts["Z"])), float)
            if not np.all(np.isfinite(a)) or np.max(np.abs(a)) > 1e6:
                warns.append("alpha looks unbounded on the K-sample")
                log.warning("factorable rule: alpha looks unbounded on the K-sample")
        return DerivativeFamily(n, m, np.asarray(parts["base"], float), "composed",
                                matrices_fn=lambda Z: np.asarray(alpha(Z), float)[:, None, None] * dg,
                                warnings=tuple(warns))
    if rule == "composition":
        inner = parts["inner"]
        hv = parts["inner_values"]
        jac = parts["jacobian"]
        if inner.is_linear:
            def mats(Z):
                return np.einsum("nij,njk->nik", jac(hv(Z)), inner.matrices(Z))

            J0 = jac(hv(np.zeros((1, inner.n))))
            return DerivativeFamily(inner.n, J0.shape[1], inner.base, "composed", matrices_fn=mats)

        def app(Z, U):
            return np.einsum("nij,nkj->nki", jac(hv(Z)), inner.apply(Z, U))

        J0 = jac(hv(np.zeros((1, inner.n))))
        return DerivativeFamily(inner.n, J0.shape[1], inner.base, "composed", apply_fn=app)
    raise ValueError(f"unknown composition rule {rule!r}")


# ---------------------------------------------------------------- scalar functions

STRUCTURES = ("smooth", "linear", "convex", "concave", "generic")


@dataclass(frozen=True, eq=False)
class ScalarFn:
    """Objective theta: R^n -> R written in the expression language (x variables only)."""

    expr: ExprVector
    n: int
    structure: str = "generic"

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise ValueError(f"objective.structure must be one of {STRUCTURES}, got {self.structure!r}")
        if self.expr.dim != 1:
            raise ValueError("objective must be a single expression")
        if self.expr.uses("z") or self.expr.uses("u"):
            raise ValueError("objective may only use x variables")

    @classmethod
    def from_source(cls, src, n, structure="generic"):
        return cls(parse([src], n_x=n, n_z=0, n_u=0), n, structure)

    @property
    def source(self):
        return to_source(self.expr.components[0])

    def __call__(self, X):
        X = np.asarray(X, float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        env = {"x": [X[:, i] for i in range(self.n)], "z": [], "u": []}
        out = np.broadcast_to(self.expr.evaluate_batch(env)[0], (X.shape[0],)).astype(float)
        return float(out[0]) if single else out

    def gradient(self, x):
        x = np.asarray(x, float)
        h = 1e-5 * (1.0 + np.abs(x))
        E = np.diag(h)
        return (self(x + E) - self(x - E)) / (2 * h)


# ---------------------------------------------------------------- Dini-type derivatives

DINI_MODES = ("dini_upper", "dini_lower", "dh_upper", "dh_lower")


@dataclass
class DiniResult:
    value: float
    spread: float
    unstable: bool
    trend: list

    def to_dict(self):
        return {"value": self.value, "spread": self.spread, "unstable": self.unstable}


def _perturbations(n, seed=0, n_random=4):
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((n_random, n))
    R /= np.linalg.norm(R, axis=1, keepdims=True)
    return np.vstack([np.zeros((1, n)), np.eye(n), -np.eye(n), R])


def dini_many(fn: ScalarFn, x_bar, W, mode, t0=1e-3, ratio=0.5, levels=20, tail=10,
              ball=10.0, seed=0):
    """Vectorised Dini / Dini-Hadamard estimates for each row of ``W``.

    Returns (values, spreads, per-level extremes).  The liminf/limsup is taken
    as the min/max over the last ``tail`` geometric levels; Dini-Hadamard
    modes also vary the direction in a ball of radius ``ball * t`` around w.
    """
    if mode not in DINI_MODES:
        raise ValueError(f"mode must be one of {DINI_MODES}")
    x_bar = np.asarray(x_bar, float)
    W = np.atleast_2d(np.asarray(W, float))
    n = W.shape[1]
    f0 = fn(x_bar)
    ts = t0 * ratio ** np.arange(levels)
    Xi = _perturbations(n, seed) if mode.startswith("dh") else np.zeros((1, n))
    upper = mode.endswith("upper")
    per_level = np.empty((len(W), levels))
    for li, t in enumerate(ts):
        Uk = W[:, None, :] + ball * t * Xi[None, :, :]  # (K, P, n)
        vals = fn((x_bar + t * Uk).reshape(-1, n)).reshape(len(W), len(Xi))
        q = (vals - f0) / t
        per_level[:, li] = q.max(axis=1) if upper else q.min(axis=1)
    tailv = per_level[:, -tail:]
    value = tailv.max(axis=1) if upper else tailv.min(axis=1)
    spread = tailv.max(axis=1) - tailv.min(axis=1)
    return value, spread, per_level


def dini_derivatives(fn: ScalarFn, x_bar, w, mode, **kw) -> DiniResult:
    """One of d+, d-, d+_H, d-_H of ``fn`` at ``x_bar`` along ``w``."""
    w = np.asarray(w, float)
    if not np.any(w):
        raise ValueError("direction w must be nonzero")
    v, s, lv = dini_many(fn, x_bar, w[None], mode, **kw)
    val = float(v[0])
    return DiniResult(val, float(s[0]), bool(s[0] > 1e-3 * (1 + abs(val))), lv[0].tolist())


# ---------------------------------------------------------------- subdifferentials

MEMBER_SLACK = 1e-6


def _sphere(n, sphere_sample):
    return sphere_grid(n, 64) if sphere_sample is None else np.atleast_2d(sphere_sample)


def _probe_points(x_bar, S):
    return np.vstack([x_bar + r * S for r in (1e-3, 1e-1, 1.0)])


def upper_subdiff_member(fn: ScalarFn, x_bar, v, sphere_sample=None, slack=MEMBER_SLACK):
    """Is v in the upper (Frechet super-) subdifferential of fn at x_bar?"""
    x_bar = np.asarray(x_bar, float)
    v = np.asarray(v, float)
    if fn.structure in ("smooth", "linear"):
        g = fn.gradient(x_bar)
        return bool(np.linalg.norm(v - g) <= slack * (1 + np.linalg.norm(g)))
    S = _sphere(fn.n, sphere_sample)
    if fn.structure == "concave":
        X = _probe_points(x_bar, S)
        lhs = fn(X)
        rhs = fn(x_bar) + (X - x_bar) @ v
        return bool(np.all(lhs <= rhs + slack * (1 + np.abs(rhs))))
    d, _, _ = dini_many(fn, x_bar, S, "dh_upper")
    return bool(np.all(S @ v >= d - slack))


def regular_subdiff_member(fn: ScalarFn, x_bar, v, sphere_sample=None, slack=MEMBER_SLACK):
    """Is v in the regular (Frechet) subdifferential of fn at x_bar?"""
    x_bar = np.asarray(x_bar, float)
    v = np.asarray(v, float)
    if fn.structure in ("smooth", "linear"):
        g = fn.gradient(x_bar)
        return bool(np.linalg.norm(v - g) <= slack * (1 + np.linalg.norm(g)))
    S = _sphere(fn.n, sphere_sample)
    if fn.structure == "convex":
        X = _probe_points(x_bar, S)
        lhs = fn(X)
        rhs = fn(x_bar) + (X - x_bar) @ v
        return bool(np.all(lhs >= rhs - slack * (1 + np.abs(rhs))))
    d, _, _ = dini_many(fn, x_bar, S, "dh_lower")
    return bool(np.all(S @ v <= d + slack))


@dataclass
class SubdiffCandidates:
    points: np.ndarray
    exact: bool
    empty: bool
    box: Optional[tuple] = None

    def to_dict(self):
        return {"points": self.points.tolist(), "exact": self.exact, "empty": self.empty,
                "box": None if self.box is None else [b.tolist() for b in self.box]}


def subdiff_candidates(fn: ScalarFn, x_bar, kind, n_samples=32, seed=0, sphere_sample=None):
    """Members of the upper (``kind='upper'``) or regular subdifferential.

    Smooth/linear tags give the gradient.  Otherwise the subdifferential sits
    in the box bounded by coordinate Dini-Hadamard derivatives; its vertices,
    centre and seeded interior samples are filtered by the membership test.
    The list is exact when the whole box passes (polyhedral case) or the box
    is empty.
    """
    if kind not in ("upper", "regular"):
        raise ValueError("kind must be 'upper' or 'regular'")
    x_bar = np.asarray(x_bar, float)
    n = fn.n
    if fn.structure in ("smooth", "linear"):
        return SubdiffCandidates(fn.gradient(x_bar)[None], True, False)
    E = np.eye(n)
    # convex/concave functions are locally Lipschitz, where Dini and Dini-Hadamard agree
    pre = "dini" if fn.structure in ("convex", "concave") else "dh"
    if kind == "upper":
        dp, _, _ = dini_many(fn, x_bar, E, pre + "_upper")
        dm, _, _ = dini_many(fn, x_bar, -E, pre + "_upper")
        lo, hi = dp, -dm
        test = upper_subdiff_member
    else:
        dp, _, _ = dini_many(fn, x_bar, E, pre + "_lower")
        dm, _, _ = dini_many(fn, x_bar, -E, pre + "_lower")
        lo, hi = -dm, dp
        test = regular_subdiff_member
    if np.any(lo > hi + 1e-7 * (1 + np.abs(lo) + np.abs(hi))):
        return SubdiffCandidates(np.zeros((0, n)), True, True, (lo, hi))
    hi = np.maximum(hi, lo)
    corners = np.array(np.meshgrid(*[[a, b] for a, b in zip(lo, hi)], indexing="ij")).reshape(n, -1).T
    corners = np.unique(corners, axis=0)
    rng = np.random.default_rng(seed)
    inner = lo + (hi - lo) * rng.random((n_samples, n))
    cand = np.vstack([corners, 0.5 * (lo + hi), inner])
    ok = np.array([test(fn, x_bar, c, sphere_sample) for c in cand])
    exact = bool(np.all(ok[:len(corners)]))
    pts = corners if exact else cand[ok]
    return SubdiffCandidates(pts, exact, len(pts) == 0, (lo, hi))
