"""Deterministic direction grids and low-discrepancy samples."""

from __future__ import annotations

import itertools
import warnings

import numpy as np
from scipy.stats import qmc


def sphere_grid(n, count=64, seed=0):
    """Quasi-uniform unit directions in R^n.

    n = 1 gives {-1, +1}; n = 2 gives ``count`` equally spaced angles starting
    at 0; n = 3 uses a Fibonacci lattice; higher dimensions use seeded
    Gaussian directions plus the signed coordinate axes.
    """
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        th = 2 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(th), np.sin(th)])
    axes = np.vstack([np.eye(n), -np.eye(n)])
    if n == 3:
        k = np.arange(count) + 0.5
        phi = np.arccos(1 - 2 * k / count)
        theta = np.pi * (1 + 5 ** 0.5) * k
        pts = np.column_stack([np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)])
    else:
        rng = np.random.default_rng(seed)
        pts = rng.standard_normal((count, n))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return np.vstack([axes, pts])


def angles_of(dirs):
    return np.degrees(np.arctan2(dirs[:, 1], dirs[:, 0]))


def sobol_points(n, count, lo, hi, seed, chunk=1024):
    """First ``count`` scrambled Sobol points in the box [lo, hi]^n (prefix-stable)."""
    eng = qmc.Sobol(d=n, scramble=True, seed=seed)
    out = []
    total = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        while total < count:
            pts = eng.random(chunk)
            out.append(lo + (hi - lo) * pts)
            total += chunk
    return np.vstack(out)[:count]


def box_vertices(A, b, lo, hi, tol=1e-9):
    """Vertices of ``{x : A x >= b} intersected with the box [lo, hi]^n`` by brute force.

    Only intended for the small constraint counts of desk-scale problems.
    """
    n = A.shape[1]
    AA = np.vstack([A, np.eye(n), -np.eye(n)])
    bb = np.concatenate([b, np.broadcast_to(np.asarray(lo, float), (n,)),
                         -np.broadcast_to(np.asarray(hi, float), (n,))])
    if len(AA) > 24:
        return np.zeros((0, n))
    verts = []
    for rows in itertools.combinations(range(len(AA)), n):
        M = AA[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, bb[list(rows)])
        if np.all(AA @ x - bb >= -tol * (1 + np.abs(bb))):
            verts.append(x)
    if not verts:
        return np.zeros((0, n))
    return np.unique(np.round(np.array(verts), 12), axis=0)
