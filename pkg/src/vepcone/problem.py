"""Vector equilibrium problem instances, the residual, and the equilibrium-set oracle."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .cones import ConvexCone, Polyhedron, dist_many, depth
from .expr import ExprVector, ExprDomainError
from .grids import sobol_points, box_vertices, sphere_grid

log = logging.getLogger(__name__)

DEFAULT_RADII = (1e-1, 1e-2, 1e-3, 1e-4)


@dataclass(frozen=True)
class SamplingConfig:
    """How the supremum over z in K and the equilibrium cloud are discretised."""

    R_z: float = 10.0
    N_z: int = 512
    seed: int = 0
    center: Optional[tuple] = None
    extra_z: tuple = ()
    cloud_radius: float = 1.0
    cloud_points: int = 4096
    tol_eq: Optional[float] = None

    def to_dict(self):
        return {
            "R_z": self.R_z, "N_z": self.N_z, "seed": self.seed,
            "center": None if self.center is None else list(self.center),
            "extra_z": [list(z) for z in self.extra_z],
            "cloud_radius": self.cloud_radius, "cloud_points": self.cloud_points,
            "tol_eq": self.tol_eq,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d or {})
        kw = {}
        for key in ("R_z", "cloud_radius", "tol_eq"):
            if d.get(key) is not None:
                kw[key] = float(d[key])
        for key in ("N_z", "seed", "cloud_points"):
            if d.get(key) is not None:
                kw[key] = int(d[key])
        if d.get("center") is not None:
            kw["center"] = tuple(float(c) for c in d["center"])
        if d.get("extra_z"):
            kw["extra_z"] = tuple(tuple(float(c) for c in z) for z in d["extra_z"])
        return cls(**kw)


@dataclass(frozen=True, eq=False)
class VepInstance:
    """find x in K with f(x, z) in C for all z in K."""

    n: int
    m: int
    C: ConvexCone
    K: Polyhedron
    f: ExprVector
    deriv: object = None  # DerivativeFamily
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    x_bar: Optional[np.ndarray] = None
    name: str = "vep"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        problems = []
        if self.C.dim != self.m:
            problems.append(f"cone: dimension {self.C.dim} but m = {self.m}")
        if self.K.n != self.n:
            problems.append(f"K: dimension {self.K.n} but n = {self.n}")
        if self.f.dim != self.m:
            problems.append(f"f: {self.f.dim} components but m = {self.m}")
        if self.f.n_x > self.n or self.f.n_z > self.n:
            problems.append(f"f: uses x/z arity ({self.f.n_x}, {self.f.n_z}) beyond n = {self.n}")
        if self.x_bar is not None and len(self.x_bar) != self.n:
            problems.append(f"x_bar: length {len(self.x_bar)} but n = {self.n}")
        if problems:
            raise ValueError("dimension mismatch:\n  " + "\n  ".join(problems))
        if not self.C.pointed:
            raise ValueError("ordering cone C must be pointed")

    # ------------------------------------------------------------ evaluation
    def f_batch(self, X, Z):
        """f at every pair: ``X`` (B, n), ``Z`` (N, n) -> (B, N, m)."""
        X = np.atleast_2d(np.asarray(X, float))
        Z = np.atleast_2d(np.asarray(Z, float))
        env = {
            "x": [X[:, i][:, None] for i in range(self.n)],
            "z": [Z[:, j][None, :] for j in range(self.n)],
            "u": [],
        }
        try:
            comps = self.f.evaluate_batch(env)
        except ExprDomainError as err:
            zinfo = ""
            if err.index is not None and len(err.index) == 2:
                b, k = err.index
                zinfo = f" for x={X[b].tolist()}, z={Z[k].tolist()}"
            raise ExprDomainError(err.msg + zinfo, component=err.component, index=err.index) from None
        shape = (X.shape[0], Z.shape[0])
        return np.stack([np.broadcast_to(c, shape) for c in comps], axis=-1).astype(float)

    def f_at(self, x, z):
        return self.f_batch(np.asarray(x, float)[None], np.asarray(z, float)[None])[0, 0]

    @property
    def reference_point(self):
        return np.asarray(self.x_bar if self.x_bar is not None else self.K.point, float)

    # ------------------------------------------------------------ z-sample
    @cached_property
    def z_sample(self):
        return build_z_sample(self.K, self.sampling)

    def z_sample_sized(self, N_z=None, R_z=None):
        cfg = self.sampling
        if N_z is not None or R_z is not None:
            cfg = SamplingConfig(**{**cfg.__dict__,
                                    "N_z": cfg.N_z if N_z is None else N_z,
                                    "R_z": cfg.R_z if R_z is None else R_z})
        return build_z_sample(self.K, cfg)

    @cached_property
    def tol_eq(self):
        if self.sampling.tol_eq is not None:
            return self.sampling.tol_eq
        y0 = self.f_at(self.reference_point, self.z_sample[0])
        return 1e-12 * (1.0 + float(np.linalg.norm(y0)))


def build_z_sample(K, cfg):
    n = K.n
    c = np.zeros(n) if cfg.center is None else np.asarray(cfg.center, float)
    R = cfg.R_z
    pts = []
    # deterministic extremes first: signed axis points on the sphere and in-ball vertices
    for i in range(n):
        for s in (1.0, -1.0):
            p = c.copy()
            p[i] += s * R
            pts.append(p)
    if K.A.shape[0]:
        V = box_vertices(K.A, K.b, c - R, c + R)
        pts.extend(v for v in V if np.linalg.norm(v - c) <= R * (1 + 1e-12))
    pts.extend(np.asarray(z, float) for z in cfg.extra_z)
    fixed = np.array(pts).reshape(-1, n)
    fixed = fixed[K.contains_many(fixed)] if len(fixed) else fixed
    for z in cfg.extra_z:
        if not K.contains(z):
            raise ValueError(f"extra z-sample point {list(z)} is not in K")
    accepted = np.zeros((0, n))
    need = cfg.N_z
    drawn = 0
    batch = 4096
    while need > 0 and drawn < 2 ** 16:
        drawn += batch
        P = sobol_points(n, drawn, c - R, c + R, cfg.seed)
        ok = K.contains_many(P) & (np.linalg.norm(P - c, axis=1) <= R)
        accepted = P[ok][:cfg.N_z]
        need = cfg.N_z - len(accepted)
        batch *= 2
    if need > 0:
        # K is thin (e.g. lower-dimensional): fill up with projections of ball points
        P = sobol_points(n, 4 * cfg.N_z, c - R, c + R, cfg.seed)
        P = P[np.linalg.norm(P - c, axis=1) <= R][:need]
        P = np.array([K.project(p) for p in P]).reshape(-1, n)
        P = P[np.linalg.norm(P - c, axis=1) <= R * (1 + 1e-12)]
        log.info("K has little volume in the sampling ball; %d z-samples from projection", len(P))
        accepted = np.vstack([accepted, P])
    Z = np.vstack([fixed, np.asarray(accepted).reshape(-1, n)])
    if len(Z) == 0:
        raise ValueError("no z-sample points in K within the sampling ball")
    _, idx = np.unique(np.round(Z, 13), axis=0, return_index=True)
    return Z[np.sort(idx)]


# ---------------------------------------------------------------- residual

@dataclass
class Residual:
    value: float
    z: np.ndarray
    n_samples: int


def residual_many(inst: VepInstance, X, Z=None, chunk=None):
    """Sample-sup residual for each row of ``X``: returns ``(values, argmax index)``."""
    X = np.atleast_2d(np.asarray(X, float))
    Z = inst.z_sample if Z is None else np.atleast_2d(Z)
    if chunk is None:
        chunk = max(1, 2_000_000 // max(1, Z.shape[0] * inst.m))
    vals = np.empty(X.shape[0])
    arg = np.empty(X.shape[0], int)
    for s in range(0, X.shape[0], chunk):
        F = inst.f_batch(X[s:s + chunk], Z)
        B, N, m = F.shape
        d = dist_many(inst.C, F.reshape(-1, m)).reshape(B, N)
        vals[s:s + chunk] = d.max(axis=1)
        arg[s:s + chunk] = d.argmax(axis=1)
    return vals, arg


def residual(inst: VepInstance, x, Z=None) -> Residual:
    """nu(x) = max over the z-sample of dist(f(x, z), C), with the maximising z."""
    Z = inst.z_sample if Z is None else np.atleast_2d(Z)
    v, a = residual_many(inst, np.asarray(x, float)[None], Z)
    return Residual(float(v[0]), Z[a[0]].copy(), Z.shape[0])


def residual_sensitivity(inst, x):
    """Residual at half and full z-sample size (the sup is only a sample-sup)."""
    half = inst.z_sample_sized(N_z=max(1, inst.sampling.N_z // 2))
    return {"half": residual(inst, x, half).value, "full": residual(inst, x).value}


def is_equilibrium(inst, x, tol=None):
    x = np.asarray(x, float)
    if not inst.K.contains(x):
        return False
    tol = inst.tol_eq if tol is None else tol
    return residual(inst, x).value <= tol


# ---------------------------------------------------------------- equilibrium oracle

class EmptyCloudError(RuntimeError):
    pass


class EquiOracle:
    """Sampled stand-in for the set of strong equilibria near a reference point.

    The cloud is built once (grid over a box in K, rejection by the residual)
    and then frozen.  Distances have upper-bound semantics.
    """

    name = "Equi"

    def __init__(self, inst, tol=None, center=None, radius=None, points=None):
        self.inst = inst
        self.tol = inst.tol_eq if tol is None else float(tol)
        self.center = inst.reference_point if center is None else np.asarray(center, float)
        self.radius = inst.sampling.cloud_radius if radius is None else float(radius)
        self.final_step = 1e-10 * (1.0 + float(np.linalg.norm(self.center)))
        if points is None:
            self._build()
        else:
            P = np.atleast_2d(np.asarray(points, float))
            ok = self.contains_many(P)
            if not np.all(ok):
                bad = P[~ok][0].tolist()
                raise ValueError(f"imported cloud point {bad} is not a certified equilibrium")
            self.points = P
            self.grid_points = np.zeros((0, inst.n))
            self.spacing = np.nan
        self.points.setflags(write=False)

    @property
    def resolution(self):
        """Distance error bound of refined queries (pattern-search terminal step)."""
        return self.final_step

    def _build(self):
        inst = self.inst
        n = inst.n
        p = int(inst.sampling.cloud_points ** (1.0 / n))
        p = max(3, min(p, 201))
        if p % 2 == 0:
            p -= 1
        axis = np.linspace(-self.radius, self.radius, p)
        mesh = np.meshgrid(*[axis] * n, indexing="ij")
        G = np.column_stack([m.reshape(-1) for m in mesh]) + self.center
        G = G[inst.K.contains_many(G)]
        self.grid_points = G
        self.spacing = axis[1] - axis[0]
        nu, _ = residual_many(inst, G) if len(G) else (np.zeros(0), None)
        acc = G[nu <= self.tol]
        acc_nu = nu[nu <= self.tol]
        acc = np.array([self._polish(x) if v > 0 else x for x, v in zip(acc, acc_nu)]).reshape(-1, n)
        if self.contains_many(self.center[None])[0]:
            acc = np.vstack([self.center[None], acc])
        if len(acc):
            _, idx = np.unique(np.round(acc, 13), axis=0, return_index=True)
            acc = acc[np.sort(idx)]
        self.points = acc
        self.rejected = int(len(G) - len(acc))
        if len(acc) == 0:
            log.warning("no certified equilibria found in the sampling region")

    def _polish(self, x, iters=20):
        """Short compass search lowering the residual of an accepted point."""
        step = 1e-3 * self.spacing
        best = residual(self.inst, x).value
        dirs = np.vstack([np.eye(self.inst.n), -np.eye(self.inst.n)])
        for _ in range(iters):
            P = x + step * dirs
            P = P[self.inst.K.contains_many(P)]
            if not len(P):
                break
            v, _ = residual_many(self.inst, P)
            k = int(np.argmin(v))
            if v[k] < best:
                x, best = P[k], v[k]
            else:
                step /= 2
            if best == 0:
                break
        return x

    # ------------------------------------------------------------ set-oracle interface
    def contains_many(self, Y):
        Y = np.atleast_2d(Y)
        inK = self.inst.K.contains_many(Y)
        out = np.zeros(len(Y), bool)
        idx = np.where(inK)[0]
        if not len(idx):
            return out
        # exact pre-screen: one z with dist > tol already rules a point out
        hard = getattr(self, "_hard", None)
        if hard is not None and len(hard):
            Zs = self.inst.z_sample[hard]
            nu_s, _ = residual_many(self.inst, Y[idx], Zs)
            idx = idx[nu_s <= self.tol]
            if not len(idx):
                return out
        nu, arg = residual_many(self.inst, Y[idx])
        out[idx] = nu <= self.tol
        bad = arg[nu > self.tol]
        if len(bad):
            known = [] if hard is None else list(hard)
            for j in np.unique(bad):
                if int(j) not in known and len(known) < 32:
                    known.append(int(j))
            self._hard = np.array(known, int)
        return out

    def contains(self, y):
        return bool(self.contains_many(np.asarray(y, float)[None])[0])

    def export_cloud(self):
        return self.points.tolist()

    @classmethod
    def from_points(cls, inst, points, tol=None):
        return cls(inst, tol=tol, points=points)

    def distance_many(self, Y):
        Y = np.atleast_2d(np.asarray(Y, float))
        out = np.full(len(Y), np.nan)
        inside = self.contains_many(Y)
        out[inside] = 0.0
        rest = np.where(~inside)[0]
        if len(rest):
            # Equi is a subset of K: if the projection onto K is an equilibrium it is the nearest one
            P = np.array([self.inst.K.project(Y[i]) for i in rest])
            ok = self.contains_many(P)
            out[rest[ok]] = np.linalg.norm(Y[rest[ok]] - P[ok], axis=1)
            far = rest[~ok]
            if len(far):
                out[far] = self.nearest_many(Y[far])[0]
        return out

    def distance(self, y):
        return float(self.distance_many(np.asarray(y, float)[None])[0])

    def nearest(self, x):
        """Pattern-search refined nearest certified equilibrium: ``(distance, point)``."""
        d, Q = self.nearest_many(np.asarray(x, float)[None])
        return float(d[0]), Q[0]

    def nearest_many(self, X):
        """Batched :meth:`nearest`: distances ``(P,)`` and nearest points ``(P, n)``."""
        if len(self.points) == 0:
            raise EmptyCloudError("no equilibria found in sampling region")
        X = np.atleast_2d(np.asarray(X, float))
        D = np.linalg.norm(X[:, None, :] - self.points[None, :, :], axis=2)
        k = np.argmin(D, axis=1)
        return self._pattern_search(X, self.points[k].copy(), D[np.arange(len(X)), k].copy())

    def _pattern_search(self, X, Q, best, max_iter=400):
        # all queries advance together so each poll round is one residual call
        P_, n = X.shape
        step = 0.5 * best
        axes = np.vstack([np.eye(n), -np.eye(n)])
        for _ in range(max_iter):
            act = np.where((step > self.final_step) & (best > 0))[0]
            if not len(act):
                break
            toward = (X[act] - Q[act]) / best[act, None]
            dirs = [toward[:, None, :]]
            if n >= 2:
                w = toward[:, None, :] + 0.5 * axes[None]
                nw = np.linalg.norm(w, axis=2, keepdims=True)
                dirs.append(w / np.maximum(nw, 1e-12))
            dirs.append(np.broadcast_to(axes[None], (len(act),) + axes.shape))
            dirs = np.concatenate(dirs, axis=1)
            polls = Q[act, None, :] + step[act, None, None] * dirs
            dP = np.linalg.norm(polls - X[act, None, :], axis=2)
            closer = dP < best[act, None]
            ok = np.zeros_like(closer)
            if np.any(closer):
                ok[closer] = self.contains_many(polls[closer])
            dP = np.where(ok, dP, np.inf)
            j = np.argmin(dP, axis=1)
            moved = np.isfinite(dP[np.arange(len(act)), j])
            mv, st = act[moved], act[~moved]
            Q[mv] = polls[moved, j[moved]]
            best[mv] = dP[moved, j[moved]]
            step[mv] = np.where(best[mv] > 0, np.minimum(step[mv], 0.5 * best[mv]), step[mv])
            step[st] *= 0.5
        return best, Q


def dist_to_equi(oracle: EquiOracle, x):
    """Upper estimate of dist(x, Equi) from the frozen cloud."""
    return oracle.distance(x)


# ---------------------------------------------------------------- error bounds

@dataclass
class ErrorBoundReport:
    radii: list
    kappa: list
    verdict: str
    slope: Optional[float]
    witnesses: list

    @property
    def holds(self):
        return self.verdict in ("holds", "holds trivially")

    @property
    def message(self):
        if self.verdict == "fails":
            if self.slope is not None and abs(self.slope + 1.0) < 0.2:
                return "fails: kappa grows like 1/delta"
            return f"fails: kappa grows like delta^{self.slope:.2f}"
        return self.verdict

    def to_dict(self):
        return {"radii": list(self.radii), "kappa": list(self.kappa), "verdict": self.verdict,
                "message": self.message, "slope": self.slope, "witnesses": self.witnesses}


def error_bound_probe(oracle: EquiOracle, x_bar, radii=DEFAULT_RADII, n_dirs=64):
    """Estimate kappa(delta) = max dist(x, Equi) / nu(x) on the sphere of radius delta in K."""
    inst = oracle.inst
    x_bar = np.asarray(x_bar, float)
    radii = sorted((float(r) for r in radii), reverse=True)
    U = sphere_grid(inst.n, n_dirs)
    kappas, wit = [], []
    for delta in radii:
        X = x_bar + delta * U
        X = X[inst.K.contains_many(X)]
        if not len(X):
            kappas.append(None)
            wit.append(None)
            continue
        nu, _ = residual_many(inst, X)
        keep = nu > oracle.tol
        if not np.any(keep):
            kappas.append(None)
            wit.append(None)
            continue
        X, nu = X[keep], nu[keep]
        d = oracle.distance_many(X)
        ratio = d / nu
        j = int(np.argmax(ratio))
        kappas.append(float(ratio[j]))
        wit.append({"x": X[j].tolist(), "dist": float(d[j]), "residual": float(nu[j])})
    verdict, slope = _error_bound_verdict(radii, kappas)
    return ErrorBoundReport(radii, kappas, verdict, slope, wit)


def _error_bound_verdict(radii, kappas):
    if kappas[-1] is None:
        return "holds trivially", None
    pairs = [(r, k) for r, k in zip(radii, kappas) if k is not None]
    if len(pairs) < 2:
        return "holds", None
    r = np.array([p[0] for p in pairs])
    k = np.array([p[1] for p in pairs])
    slope = None
    if np.all(k > 0):
        slope = float(np.polyfit(np.log(r), np.log(k), 1)[0])
    if k[-1] <= 2.0 * k[0]:
        return "holds", slope
    if np.all(np.diff(k) >= -1e-9 * k[:-1]) and k[-1] / max(k[0], 1e-300) >= 10.0:
        return "fails", slope
    return "indeterminate", slope


# ---------------------------------------------------------------- sigma condition

@dataclass
class SigmaReport:
    sigma: float
    verdict: bool
    witnesses: list
    bound_checked: Optional[bool] = None
    bound_violations: list = field(default_factory=list)

    def to_dict(self):
        return {"sigma": self.sigma, "verdict": self.verdict, "witnesses": self.witnesses,
                "bound_checked": self.bound_checked, "bound_violations": self.bound_violations}


def sigma_condition_probe(inst, sigma, sample=None, oracle=None, n_dirs=64, max_points=16):
    """Search, at sampled x0 in K outside Equi, a unit u0 in cone(K - x0) with
    Df(x0, z)(u0) + sigma * B inside C for every sampled z."""
    from .deriv import family_at
    from .tangent import polyhedral_tangent

    if not sigma > 0:
        raise ValueError("sigma must be positive")
    oracle = oracle or EquiOracle(inst)
    if sample is None:
        G = oracle.grid_points
        nu, _ = residual_many(inst, G) if len(G) else (np.zeros(0), None)
        G = G[nu > oracle.tol]
        if len(G) > max_points:
            G = G[np.linspace(0, len(G) - 1, max_points).astype(int)]
        sample = G
    sample = np.atleast_2d(np.asarray(sample, float))
    Z = inst.z_sample
    U = sphere_grid(inst.n, n_dirs)
    witnesses = []
    ok_all = True
    for x0 in sample:
        fam = family_at(inst, x0)
        T = polyhedral_tangent(inst.K, x0)
        TA = T.rows
        cand = U[np.all(U @ TA.T >= -1e-12, axis=1)] if TA.shape[0] else U

        def score(Us):
            Y = fam.apply(Z, Us)  # (N, K, m)
            return np.min(depth(inst.C, Y), axis=0)

        best_u, best = None, -np.inf
        if len(cand):
            s = score(cand)
            k = int(np.argmax(s))
            best_u, best = cand[k], float(s[k])
            best_u, best = _polish_on_sphere(best_u, best, score, TA)
        ok = best >= sigma
        ok_all &= ok
        witnesses.append({"x0": x0.tolist(), "u0": None if best_u is None else best_u.tolist(),
                          "depth": best, "ok": bool(ok)})
    rep = SigmaReport(float(sigma), bool(ok_all), witnesses)
    if ok_all:
        viol = []
        for x in sample:
            d = oracle.distance(x)
            nu = residual(inst, x).value
            slack = oracle.resolution + (oracle.spacing if np.isfinite(oracle.spacing) else 0.0)
            if d > nu / sigma + slack:
                viol.append({"x": x.tolist(), "dist": d, "bound": nu / sigma})
        rep.bound_checked = not viol
        rep.bound_violations = viol
    return rep


def _polish_on_sphere(u, val, score, TA, iters=30):
    n = u.shape[0]
    step = 0.1
    axes = np.vstack([np.eye(n), -np.eye(n)])
    while step > 1e-6 and iters > 0:
        iters -= 1
        P = u + step * axes
        P /= np.linalg.norm(P, axis=1, keepdims=True)
        if TA.shape[0]:
            P = P[np.all(P @ TA.T >= -1e-12, axis=1)]
        if len(P):
            s = score(P)
            k = int(np.argmax(s))
            if s[k] > val:
                u, val = P[k], float(s[k])
                continue
        step /= 2
    return u, val
