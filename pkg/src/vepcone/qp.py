"""Primal active-set method for Euclidean projection onto ``{x : A x >= b}``."""

from __future__ import annotations

import numpy as np


class QPError(RuntimeError):
    """Raised when the active-set iteration hits its cap."""


def project_polyhedron(v, A, b, x0, tol=1e-12, max_iter=None):
    """Project ``v`` onto ``{x : A x >= b}`` starting from the feasible point ``x0``.

    Returns the projection.  The working set is kept linearly independent by
    construction (a blocking constraint always has ``a_i @ p != 0`` while
    ``A_W @ p == 0``).
    """
    v = np.asarray(v, float)
    A = np.asarray(A, float).reshape(-1, v.shape[0])
    b = np.asarray(b, float).reshape(-1)
    if A.shape[0] == 0:
        return v.copy()
    scale = 1.0 + np.abs(v).max(initial=0.0)
    feas_tol = 1e-11 * scale * (1.0 + np.linalg.norm(A, axis=1))
    if np.all(A @ v - b >= -feas_tol):
        return v.copy()
    d = v.shape[0]
    if max_iter is None:
        max_iter = 100 * max(d, 1) + A.shape[0]
    x = np.asarray(x0, float).copy()
    W = []
    for _ in range(max_iter):
        g = x - v
        if W:
            # project onto the null space of the working rows (SVD: robust for near-parallel rows)
            _, sv, Vt = np.linalg.svd(A[W])
            N = Vt[int(np.sum(sv > 1e-12 * sv[0])):]
            p = -(N.T @ (N @ g))
        else:
            p = -g
        if np.linalg.norm(p) <= tol * scale:
            if not W:
                return x
            lam = np.linalg.lstsq(A[W].T, g, rcond=None)[0]
            k = int(np.argmin(lam))
            if lam[k] >= -tol * scale:
                return x
            W.pop(k)
            continue
        Ap = A @ p
        slack = A @ x - b
        alpha, block = 1.0, None
        mask = Ap < -1e-15 * np.linalg.norm(p)
        mask[W] = False
        if np.any(mask):
            idx = np.where(mask)[0]
            ratios = np.maximum(slack[idx], 0.0) / -Ap[idx]
            k = int(np.argmin(ratios))
            if ratios[k] < 1.0:
                alpha, block = float(ratios[k]), int(idx[k])
        x = x + alpha * p
        if block is not None:
            W.append(block)
    raise QPError(f"active-set projection did not converge in {max_iter} iterations")
