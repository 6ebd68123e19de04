"""Tangent-cone machinery for sets given by membership/distance oracles."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .cones import ConvexCone, Polyhedron, dist_many, member, MEMBER_TOL, active_tolerance
from .grids import sphere_grid

TAU_DIR = 0.05
T0, T_RATIO, T_LEVELS = 1e-1, 0.5, 12
# radial/feasible grids stop near 2e-7: below that an absolute membership
# tolerance can no longer tell directions apart
RADIAL_LEVELS = 20
EXACT_TOL = 1e-12
RADIAL_EPS = tuple(10.0 ** -k for k in range(1, 7))
BALL_RADII = (1e-1, 1e-2, 1e-3)


# ---------------------------------------------------------------- set oracles

class PolyhedronOracle:
    """Exact membership and distance for a polyhedron."""

    resolution = 0.0

    def __init__(self, poly: Polyhedron, name="K"):
        self.poly = poly
        self.name = name

    def contains_many(self, Y):
        return self.poly.contains_many(Y, tol=EXACT_TOL)

    def distance_many(self, Y):
        return dist_many(self.poly, Y)


class ConeOracle:
    """Exact membership and distance for a convex cone (shifted to ``apex``)."""

    resolution = 0.0

    def __init__(self, cone: ConvexCone, apex=None, name="cone"):
        self.cone = cone
        self.apex = np.zeros(cone.dim) if apex is None else np.asarray(apex, float)
        self.name = name

    def contains_many(self, Y):
        Y = np.atleast_2d(Y) - self.apex
        return dist_many(self.cone, Y) <= EXACT_TOL * (1 + np.linalg.norm(Y, axis=1))

    def distance_many(self, Y):
        return dist_many(self.cone, np.atleast_2d(Y) - self.apex)


class FunctionOracle:
    """Oracle from plain callables on single points (for ad-hoc sets)."""

    def __init__(self, contains: Callable, distance: Callable, resolution=0.0, name="set"):
        self._contains = contains
        self._distance = distance
        self.resolution = resolution
        self.name = name

    def contains_many(self, Y):
        return np.array([bool(self._contains(y)) for y in np.atleast_2d(Y)])

    def distance_many(self, Y):
        return np.array([float(self._distance(y)) for y in np.atleast_2d(Y)])


class UnionOracle:
    """Union of finitely many oracles."""

    def __init__(self, parts, name="union"):
        self.parts = list(parts)
        self.resolution = max(getattr(p, "resolution", 0.0) for p in self.parts)
        self.name = name

    def contains_many(self, Y):
        return np.any([p.contains_many(Y) for p in self.parts], axis=0)

    def distance_many(self, Y):
        return np.min([p.distance_many(Y) for p in self.parts], axis=0)


# ---------------------------------------------------------------- estimates

@dataclass
class ConeEstimate:
    """A sampled cone: unit directions with scores and member verdicts."""

    base: np.ndarray
    directions: np.ndarray
    scores: np.ndarray
    tau: float = TAU_DIR
    notion: str = "contingent"
    oracle: str = "set"
    resolution: float = 0.0
    guard: float = 0.0
    trend: Optional[np.ndarray] = None  # True where the minimising t was the smallest level
    extra: dict = field(default_factory=dict)

    @property
    def verdicts(self):
        return self.scores <= self.tau

    @property
    def members(self):
        return self.directions[self.verdicts]

    @property
    def indeterminate(self):
        return np.abs(self.scores - self.tau) <= self.guard

    def to_dict(self):
        rows = []
        for i, (v, s, ok) in enumerate(zip(self.directions, self.scores, self.verdicts)):
            row = {"direction": [float(c) for c in v], "score": float(s), "member": bool(ok)}
            if self.trend is not None:
                row["smallest_t"] = bool(self.trend[i])
            rows.append(row)
        return {"notion": self.notion, "oracle": self.oracle, "tau": self.tau,
                "resolution": self.resolution, "guard": self.guard,
                "base": self.base.tolist(), "n_members": int(self.verdicts.sum()),
                "directions": rows}


def t_grid(t0=T0, ratio=T_RATIO, levels=T_LEVELS):
    return t0 * ratio ** np.arange(levels)


def default_directions(n, count=None):
    if count is None:
        count = 360 if n == 2 else 64
    return sphere_grid(n, count)


def contingent_cone_sampled(oracle, x_bar, directions=None, t0=T0, ratio=T_RATIO,
                            levels=T_LEVELS, tau=TAU_DIR):
    """Score each unit direction v by min over the t-grid of dist(x_bar + t v, S) / t."""
    x_bar = np.asarray(x_bar, float)
    U = default_directions(x_bar.shape[0]) if directions is None else np.atleast_2d(directions)
    ts = t_grid(t0, ratio, levels)
    P = (x_bar[None, None, :] + ts[None, :, None] * U[:, None, :]).reshape(-1, x_bar.shape[0])
    try:
        D = oracle.distance_many(P).reshape(len(U), len(ts))
    except Exception as err:
        raise type(err)(f"{err} (while scoring directions from {x_bar.tolist()})") from err
    Q = D / ts[None, :]
    scores = Q.min(axis=1)
    trend = np.argmin(Q, axis=1) == len(ts) - 1
    res = float(getattr(oracle, "resolution", 0.0))
    guard = 2.0 * res / ts[-1]
    return ConeEstimate(x_bar, U, scores, tau, "contingent", getattr(oracle, "name", "set"),
                        res, guard, trend & (scores > 0))


def score_against_cone(cone: ConvexCone, U, tau=TAU_DIR, base=None, notion="exact"):
    """Exact-cone scores dist(v, cone) for unit directions (same scale as the contingent score)."""
    U = np.atleast_2d(U)
    s = dist_many(cone, U)
    base = np.zeros(U.shape[1]) if base is None else np.asarray(base, float)
    return ConeEstimate(base, U, s, tau, notion, "exact")


def estimate_from_mask(U, mask, base, notion, tau=TAU_DIR, oracle="sampled"):
    """Cone estimate from a per-direction member mask.

    Non-members are scored by the sine of the angle to the nearest member
    direction (1 when no member lies within 90 degrees).
    """
    U = np.atleast_2d(U)
    M = U[mask]
    if len(M) == 0:
        scores = np.ones(len(U))
    else:
        c = np.clip(U @ M.T, -1.0, 1.0)
        best = c.max(axis=1)
        scores = np.where(best > 0, np.sqrt(np.maximum(0.0, 1.0 - best ** 2)), 1.0)
    scores[mask] = 0.0
    return ConeEstimate(np.asarray(base, float), U, scores, tau, notion, oracle)


# ---------------------------------------------------------------- direction cones

def radial_cone_member(oracle, x_bar, v, eps_grid=RADIAL_EPS, levels=RADIAL_LEVELS):
    """For every eps in the grid, some grid step t < eps has x_bar + t v in S."""
    x_bar = np.asarray(x_bar, float)
    v = np.asarray(v, float)
    ts = t_grid(T0, T_RATIO, levels)
    hit = oracle.contains_many(x_bar + ts[:, None] * v)
    return bool(all(np.any(hit & (ts < eps)) for eps in eps_grid))


def _segment_ts(eps_hat, levels=RADIAL_LEVELS, n_uniform=64):
    grid = t_grid(T0, T_RATIO, levels)
    grid = grid[grid < eps_hat]
    uni = eps_hat * (np.arange(1, n_uniform + 1) / (n_uniform + 1))
    return np.concatenate([grid, uni])


def _feasible_eps(oracle, x_bar, V, eps_grid):
    """Largest eps in the grid for which every sampled segment (0, eps) x V stays in S."""
    for eps in sorted(eps_grid, reverse=True):
        ts = _segment_ts(eps)
        P = (x_bar[None, None, :] + ts[None, :, None] * V[:, None, :]).reshape(-1, x_bar.shape[0])
        if np.all(oracle.contains_many(P)):
            return eps
    return None


def feasible_direction_member(oracle, x_bar, v, eps_grid=RADIAL_EPS):
    """The sampled segment x_bar + (0, eps_hat) v stays in S for some grid level eps_hat."""
    x_bar = np.asarray(x_bar, float)
    return _feasible_eps(oracle, x_bar, np.asarray(v, float)[None], eps_grid) is not None


def inner_direction_member(oracle, x_bar, v, eps_grid=RADIAL_EPS, radii=BALL_RADII, n_ball=16):
    """Feasible uniformly over a ball of directions around v (some tested radius)."""
    x_bar = np.asarray(x_bar, float)
    v = np.asarray(v, float)
    if not feasible_direction_member(oracle, x_bar, v, eps_grid):
        return False
    Xi = sphere_grid(x_bar.shape[0], n_ball)
    scale = np.linalg.norm(v)
    for rho in sorted(radii, reverse=True):
        V = np.vstack([v, v + rho * scale * Xi])
        if _feasible_eps(oracle, x_bar, V, eps_grid) is not None:
            return True
    return False


def polyhedral_tangent(poly: Polyhedron, x_bar) -> ConvexCone:
    """Cone of active constraints at x_bar (equal to the radial cone for polyhedra)."""
    x_bar = np.asarray(x_bar, float)
    if not poly.contains(x_bar, tol=max(MEMBER_TOL, active_tolerance(x_bar))):
        raise ValueError(f"point {x_bar.tolist()} is not in K")
    return ConvexCone.halfspaces(poly.A[poly.active_rows(x_bar)], dim=poly.n)


def misclassifications(estimate: ConeEstimate, cone: ConvexCone):
    """Directions where the sampled verdict disagrees with the exact cone at the same tau,
    ignoring those inside the guard band."""
    exact = dist_many(cone, estimate.directions)
    truth = exact <= estimate.tau
    guard = estimate.indeterminate | (np.abs(exact - estimate.tau) <= estimate.guard)
    bad = (truth != estimate.verdicts) & ~guard
    return np.where(bad)[0]
