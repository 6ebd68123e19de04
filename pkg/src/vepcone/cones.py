"""Polyhedral convex cones and polyhedra: membership, projection, duality,
tangent and normal cones.

Cones come in three representations:

* ``orthant``     -- the nonnegative orthant of R^d;
* ``halfspaces``  -- ``{v : A v >= 0}`` (rows of ``A``);
* ``generators``  -- ``{G lam : lam >= 0}`` (columns of ``G``).

Polyhedra are ``{x : A x >= b}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .lp import linprog, feasible_point
from .qp import project_polyhedron, QPError

__all__ = [
    "ConvexCone", "Polyhedron", "RepresentationError", "DimensionError", "QPError",
    "member", "member_many", "dist", "dist_many", "dual", "tangent_cone_at", "normal_cone_at",
    "cone_intersection", "interior_member", "reduce_rows", "depth", "is_pointed",
    "active_tolerance", "cone_from_dict", "polyhedron_from_dict",
]

MEMBER_TOL = 1e-9


def row_norms(V):
    """Euclidean norms of the rows of ``V`` without underflow for tiny entries."""
    V = np.atleast_2d(V)
    scale = np.max(np.abs(V), axis=1) if V.shape[1] else np.zeros(V.shape[0])
    safe = np.where(scale > 0, scale, 1.0)
    return scale * np.linalg.norm(V / safe[:, None], axis=1)


def _norm(v):
    return float(row_norms(np.asarray(v, float)[None])[0])


class RepresentationError(ValueError):
    pass


class DimensionError(ValueError):
    pass


def active_tolerance(y):
    return 1e-8 * (1.0 + float(np.linalg.norm(y)))


def _check_dim(d, v):
    v = np.asarray(v, float).reshape(-1)
    if v.shape[0] != d:
        raise DimensionError(f"vector of length {v.shape[0]} for object of dimension {d}")
    return v


@dataclass(frozen=True, eq=False)
class ConvexCone:
    kind: str
    dim: int
    A: Optional[np.ndarray] = None  # halfspace rows
    G: Optional[np.ndarray] = None  # generator columns

    # ------------------------------------------------------------ constructors
    @classmethod
    def orthant(cls, d):
        return cls("orthant", int(d))

    @classmethod
    def halfspaces(cls, A, dim=None):
        A = np.asarray(A, float)
        if A.size == 0:
            if dim is None:
                raise DimensionError("empty halfspace matrix needs an explicit dim")
            A = np.zeros((0, int(dim)))
        A = np.atleast_2d(A)
        if dim is not None and A.shape[1] != dim:
            raise DimensionError(f"halfspace rows have {A.shape[1]} columns, expected {dim}")
        A.setflags(write=False)
        return cls("halfspaces", A.shape[1], A=A)

    @classmethod
    def generators(cls, G, dim=None):
        G = np.asarray(G, float)
        if G.size == 0:
            if dim is None:
                raise DimensionError("empty generator matrix needs an explicit dim")
            G = np.zeros((int(dim), 0))
        if G.ndim == 1:
            G = G.reshape(-1, 1)
        if dim is not None and G.shape[0] != dim:
            raise DimensionError(f"generators have {G.shape[0]} rows, expected {dim}")
        G.setflags(write=False)
        return cls("generators", G.shape[0], G=G)

    @classmethod
    def full_space(cls, d):
        return cls.halfspaces(np.zeros((0, d)), dim=d)

    @classmethod
    def zero(cls, d):
        return cls.generators(np.zeros((d, 0)), dim=d)

    # ------------------------------------------------------------ helpers
    @property
    def rows(self):
        """Halfspace rows, converting if necessary."""
        return self.to_halfspaces().A

    def to_halfspaces(self):
        if self.kind == "halfspaces":
            return self
        if self.kind == "orthant":
            return ConvexCone.halfspaces(np.eye(self.dim))
        return ConvexCone.halfspaces(_generators_to_rows(self.G), dim=self.dim)

    def to_generators(self):
        if self.kind == "generators":
            return self
        if self.kind == "orthant":
            return ConvexCone.generators(np.eye(self.dim))
        # {Av >= 0} = polar of cone(-A^T), and polar of that again; convert via the dual
        d = dual(self)  # generators(-A^T)
        return ConvexCone.generators(-_generators_to_rows(d.G).T, dim=self.dim)

    @cached_property
    def pointed(self):
        return is_pointed(self)

    @property
    def is_full_space(self):
        return self.kind == "halfspaces" and self.A.shape[0] == 0

    def to_dict(self):
        if self.kind == "orthant":
            return {"type": "orthant", "dim": self.dim}
        if self.kind == "halfspaces":
            return {"type": "halfspaces", "dim": self.dim, "A": self.A.tolist()}
        return {"type": "generators", "dim": self.dim, "G": self.G.tolist()}

    def __repr__(self):
        if self.kind == "orthant":
            return f"ConvexCone.orthant({self.dim})"
        if self.kind == "halfspaces":
            return f"ConvexCone.halfspaces({self.A.tolist()}, dim={self.dim})"
        return f"ConvexCone.generators({self.G.tolist()}, dim={self.dim})"


def _generators_to_rows(G):
    """Halfspace rows of ``cone(G)``.  Exact for d <= 2, simplicial and trivial cones."""
    d, k = G.shape
    norms = np.linalg.norm(G, axis=0)
    G = G[:, norms > 1e-14]
    k = G.shape[1]
    if k == 0:
        return np.vstack([np.eye(d), -np.eye(d)])
    if d == 1:
        has_pos = np.any(G[0] > 0)
        has_neg = np.any(G[0] < 0)
        if has_pos and has_neg:
            return np.zeros((0, 1))
        return np.array([[1.0]]) if has_pos else np.array([[-1.0]])
    if d == 2:
        return _rows_2d(G)
    if k == d and abs(np.linalg.det(G)) > 1e-12:
        return np.linalg.inv(G)
    raise RepresentationError(
        f"cannot convert a {k}-generator cone in dimension {d} to halfspaces without facet enumeration")


def _rows_2d(G):
    ang = np.sort(np.mod(np.arctan2(G[1], G[0]), 2 * np.pi))
    ang = np.unique(np.round(ang, 14))
    if len(ang) == 1:
        r = np.array([np.cos(ang[0]), np.sin(ang[0])])
        perp = np.array([-r[1], r[0]])
        return np.vstack([perp, -perp, r])
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
    j = int(np.argmax(gaps))
    gap = gaps[j]
    eps = 1e-12
    if gap < np.pi - eps:
        return np.zeros((0, 2))
    start = ang[(j + 1) % len(ang)]  # first ray after the gap (counter-clockwise)
    end = ang[j]
    r1 = np.array([np.cos(start), np.sin(start)])
    r2 = np.array([np.cos(end), np.sin(end)])
    n1 = np.array([-r1[1], r1[0]])   # rotate +90: points into the sector
    n2 = np.array([r2[1], -r2[0]])   # rotate -90
    if abs(gap - np.pi) <= eps:
        # a half-plane or a line; a line has exactly two opposite directions
        span = 2 * np.pi - gap
        if abs(span - np.pi) <= eps and len(ang) == 2:
            return np.vstack([n1, -n1])
        return n1.reshape(1, 2)
    return np.vstack([n1, n2])


@dataclass(frozen=True, eq=False)
class Polyhedron:
    """``{x : A x >= b}``; nonemptiness is certified by an LP at construction."""

    A: np.ndarray
    b: np.ndarray
    n: int
    point: np.ndarray = field(repr=False, default=None)

    @classmethod
    def from_arrays(cls, A, b, n=None):
        A = np.asarray(A, float)
        b = np.asarray(b, float).reshape(-1)
        if A.size == 0:
            if n is None:
                raise DimensionError("empty constraint matrix needs an explicit dimension")
            A = np.zeros((0, int(n)))
        A = np.atleast_2d(A)
        if n is not None and A.shape[1] != n:
            raise DimensionError(f"K.A has {A.shape[1]} columns, expected {n}")
        if A.shape[0] != b.shape[0]:
            raise DimensionError(f"K.A has {A.shape[0]} rows but K.b has {b.shape[0]} entries")
        n = A.shape[1]
        if A.shape[0]:
            x0 = feasible_point(A_ub=-A, b_ub=-b, n=n)
            if x0 is None:
                raise ValueError("polyhedron {x : A x >= b} is empty")
        else:
            x0 = np.zeros(n)
        A.setflags(write=False)
        b.setflags(write=False)
        return cls(A, b, n, x0)

    @classmethod
    def orthant(cls, n):
        return cls.from_arrays(np.eye(n), np.zeros(n))

    @classmethod
    def whole_space(cls, n):
        return cls.from_arrays(np.zeros((0, n)), np.zeros(0), n=n)

    @classmethod
    def box(cls, lo, hi):
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        n = lo.shape[0]
        return cls.from_arrays(np.vstack([np.eye(n), -np.eye(n)]), np.concatenate([lo, -hi]))

    def contains(self, x, tol=MEMBER_TOL):
        x = _check_dim(self.n, x)
        return bool(np.all(self.A @ x - self.b >= -tol * (1 + np.abs(self.b))))

    def contains_many(self, X, tol=MEMBER_TOL):
        X = np.atleast_2d(X)
        if self.A.shape[0] == 0:
            return np.ones(X.shape[0], bool)
        return np.all(X @ self.A.T - self.b >= -tol * (1 + np.abs(self.b)), axis=1)

    def active_rows(self, x):
        x = _check_dim(self.n, x)
        tol = active_tolerance(x) * (1 + np.linalg.norm(self.A, axis=1))
        return np.where(np.abs(self.A @ x - self.b) <= tol)[0]

    def project(self, v):
        v = _check_dim(self.n, v)
        return project_polyhedron(v, self.A, self.b, self.point)

    def to_dict(self):
        return {"A": self.A.tolist(), "b": self.b.tolist(), "dim": self.n}


# ---------------------------------------------------------------- operations

def dist(obj, v):
    """Euclidean distance from ``v`` to a cone or polyhedron; returns ``(d, projection)``."""
    if isinstance(obj, Polyhedron):
        p = obj.project(v)
        v = np.asarray(v, float)
        return _norm(v - p), p
    v = _check_dim(obj.dim, v)
    if obj.kind == "orthant":
        p = np.maximum(v, 0.0)
    elif obj.kind == "halfspaces":
        p = project_polyhedron(v, obj.A, np.zeros(obj.A.shape[0]), np.zeros(obj.dim))
    else:
        # Moreau: v = P_K(v) + P_{K polar}(v), polar of cone(G) is {u : G^T u <= 0}
        q = project_polyhedron(v, -obj.G.T, np.zeros(obj.G.shape[1]), np.zeros(obj.dim))
        p = v - q
    return _norm(v - p), p


def dist_many(obj, V):
    """Distances of the rows of ``V`` to ``obj`` (vectorised where exact formulas allow)."""
    V = np.atleast_2d(np.asarray(V, float))
    if isinstance(obj, ConvexCone) and obj.kind == "orthant":
        return row_norms(np.minimum(V, 0.0))
    if isinstance(obj, ConvexCone) and obj.kind == "halfspaces":
        if obj.A.shape[0] == 0:
            return np.zeros(V.shape[0])
        inside = np.all(V @ obj.A.T >= 0, axis=1)
    elif isinstance(obj, Polyhedron):
        inside = obj.contains_many(V, tol=0.0)
    else:
        inside = np.zeros(V.shape[0], bool)
    out = np.zeros(V.shape[0])
    for i in np.where(~inside)[0]:
        out[i] = dist(obj, V[i])[0]
    return out


def member_many(cone, V, tol=MEMBER_TOL):
    """``dist(v, cone) <= tol`` for each row of ``V``; ``tol`` may be per row.

    For halfspace cones the largest normalised row violation is a lower bound
    on the distance, so projections are only solved for borderline rows.
    """
    V = np.atleast_2d(np.asarray(V, float))
    tol = np.broadcast_to(np.asarray(tol, float), (V.shape[0],))
    if cone.kind != "halfspaces" or cone.A.shape[0] == 0:
        return dist_many(cone, V) <= tol
    An = cone.A / np.linalg.norm(cone.A, axis=1, keepdims=True)
    lower = np.max(-(V @ An.T), axis=1)
    out = lower <= 0
    for i in np.where(~out & (lower <= tol))[0]:
        out[i] = dist(cone, V[i])[0] <= tol[i]
    return out


def member(cone, v, tol=MEMBER_TOL):
    """``True`` iff ``dist(v, cone) <= tol``."""
    v = _check_dim(cone.dim, v)
    if cone.kind == "orthant":
        return bool(_norm(np.minimum(v, 0)) <= tol)
    if cone.kind == "halfspaces" and np.all(cone.A @ v >= 0):
        return True
    return dist(cone, v)[0] <= tol


def dual(cone):
    """Negative dual (polar) cone ``{u : <u, c> <= 0 for all c in cone}``."""
    if cone.kind == "orthant":
        return ConvexCone.generators(-np.eye(cone.dim))
    if cone.kind == "halfspaces":
        return ConvexCone.generators(-cone.A.T, dim=cone.dim)
    return ConvexCone.halfspaces(-cone.G.T, dim=cone.dim)


def tangent_cone_at(cone, y, tol=None):
    """Tangent cone of a (halfspace-representable) cone at a member ``y``."""
    y = _check_dim(cone.dim, y)
    if not member(cone, y, tol=max(MEMBER_TOL, active_tolerance(y))):
        raise ValueError(f"point {y.tolist()} is not in the cone")
    A = cone.rows
    if A.shape[0] == 0:
        return ConvexCone.full_space(cone.dim)
    An = A / np.linalg.norm(A, axis=1, keepdims=True)
    tol = active_tolerance(y) if tol is None else tol
    act = np.abs(An @ y) <= tol
    return ConvexCone.halfspaces(A[act], dim=cone.dim)


def normal_cone_at(poly, x):
    x = _check_dim(poly.n, x)
    if not poly.contains(x, tol=max(MEMBER_TOL, active_tolerance(x))):
        raise ValueError(f"point {x.tolist()} is not in the polyhedron")
    act = poly.active_rows(x)
    return ConvexCone.generators(-poly.A[act].T, dim=poly.n)


def cone_intersection(cones: Sequence[ConvexCone], reduce=False):
    if not cones:
        raise ValueError("empty list of cones")
    d = cones[0].dim
    rows = []
    for c in cones:
        if c.dim != d:
            raise DimensionError(f"cone of dimension {c.dim} in an intersection of dimension {d}")
        rows.append(c.rows)
    A = np.vstack(rows) if rows else np.zeros((0, d))
    if reduce:
        A = reduce_rows(A)
    return ConvexCone.halfspaces(A, dim=d)


def interior_member(cone, v, margin):
    """``True`` iff ``a_i . v >= margin * |v|`` for every normalised row ``a_i``.

    The zero vector is interior only to the whole space.
    """
    if cone.kind == "generators":
        raise RepresentationError("interior test needs a halfspace representation; convert first")
    v = _check_dim(cone.dim, v)
    A = cone.rows
    if A.shape[0] == 0:
        return True
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return False
    An = A / np.linalg.norm(A, axis=1, keepdims=True)
    return bool(np.all(An @ v >= margin * nv))


def depth(cone, y):
    """Smallest normalised row value ``min_i a_i . y / |a_i|`` (``+inf`` for the whole space)."""
    A = cone.rows
    if A.shape[0] == 0:
        return np.inf
    An = A / np.linalg.norm(A, axis=1, keepdims=True)
    y = np.asarray(y, float)
    return float(np.min(An @ y)) if y.ndim == 1 else np.min(y @ An.T, axis=-1)


def reduce_rows(A, tol=1e-10):
    """Irredundant, normalised rows describing the same cone ``{v : A v >= 0}``.

    Zero rows are dropped, duplicates merged, and a row is removed when it is a
    nonnegative combination of the remaining ones (Farkas).
    """
    A = np.asarray(A, float)
    if A.shape[0] == 0:
        return A.reshape(0, A.shape[1])
    norms = np.linalg.norm(A, axis=1)
    A = A[norms > 1e-13] / norms[norms > 1e-13, None]
    if A.shape[0] == 0:
        return A
    _, idx = np.unique(np.round(A, 12), axis=0, return_index=True)
    A = A[np.sort(idx)]
    if A.shape[1] == 2 and A.shape[0] > 2:
        ang = np.mod(np.arctan2(A[:, 1], A[:, 0]), 2 * np.pi)
        order = np.argsort(ang)
        gaps = np.diff(np.concatenate([ang[order], [ang[order[0]] + 2 * np.pi]]))
        j = int(np.argmax(gaps))
        if gaps[j] > np.pi + 1e-9:
            # rows span a pointed sector: only its two bounding rows matter
            first, last = order[(j + 1) % len(order)], order[j]
            return A[sorted({int(first), int(last)})]
    keep = list(range(A.shape[0]))
    # try the rows closest to the centre of the bundle first: they are the most likely redundant
    centre = A.mean(axis=0)
    order = np.argsort(-(A @ centre))
    for i in order:
        others = [j for j in keep if j != i]
        if not others:
            break
        d, _ = dist(ConvexCone.generators(A[others].T), A[i])
        if d <= tol:
            keep.remove(i)
    return A[sorted(keep)]


def is_pointed(cone):
    """LP check: no nonzero ``v`` with both ``v`` and ``-v`` in the cone."""
    d = cone.dim
    if cone.kind == "orthant":
        return True
    if cone.kind == "generators":
        G = cone.G
        k = G.shape[1]
        if k == 0:
            return True
        # pointed iff the only lam >= 0 with G lam = 0 is lam = 0
        res = linprog(-np.ones(k), A_eq=G, b_eq=np.zeros(d), bounds=[(0, 1)] * k)
        return bool(res.success and -res.fun <= 1e-9)
    A = cone.A
    if A.shape[0] == 0:
        return d == 0
    for i in range(d):
        for s in (1.0, -1.0):
            c = np.zeros(d)
            c[i] = -s
            res = linprog(c, A_eq=A, b_eq=np.zeros(A.shape[0]), bounds=[(-1, 1)] * d)
            if res.success and -res.fun > 1e-9:
                return False
    return True


# ---------------------------------------------------------------- serialisation

def cone_from_dict(d):
    kind = d.get("type")
    if kind == "orthant":
        return ConvexCone.orthant(int(d["dim"]))
    if kind == "halfspaces":
        return ConvexCone.halfspaces(d["A"], dim=d.get("dim"))
    if kind == "generators":
        return ConvexCone.generators(d["G"], dim=d.get("dim"))
    raise ValueError(f"unknown cone type {kind!r}")


def polyhedron_from_dict(d, n=None):
    if d.get("type") == "orthant":
        return Polyhedron.orthant(int(d.get("dim", n)))
    if d.get("type") == "whole":
        return Polyhedron.whole_space(int(d.get("dim", n)))
    return Polyhedron.from_arrays(d.get("A", []), d.get("b", []), n=d.get("dim", n))
