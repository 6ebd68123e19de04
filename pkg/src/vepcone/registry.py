"""Built-in instances with golden metadata.

Each golden entry records the limiting value, the value expected on the
pinned finite grid, and where the number comes from (``worked`` for values
read off the worked examples, ``derived`` for values from an independent
computation).
"""

from __future__ import annotations

import copy

import numpy as np

from .problemfile import load_problem

_MM = "1/(norm2(z1,z2)^2+1)"

EX31 = {
    "name": "ex31",
    "dims": {"n": 2, "m": 2},
    "cone": {"type": "orthant", "dim": 2},
    "K": {"type": "orthant", "dim": 2},
    "f": [f"0.5*(-(1 - {_MM})*x1 + x2 + 1)^2", f"0.5*((1 + {_MM})*x1 - x2 + 1)^2"],
    "x_bar": [0.0, 0.0],
    "bderiv": {"at": [0.0, 0.0], "matrix_exprs": [[f"-(1 - {_MM})", "1"], [f"1 + {_MM}", "-1"]]},
    "sampling": {"R_z": 10.0, "N_z": 512, "seed": 0},
}

EX32 = {
    "name": "ex32",
    "dims": {"n": 1, "m": 1},
    "cone": {"type": "orthant", "dim": 1},
    "K": {"type": "whole", "dim": 1},
    "f": ["x1^2*z1/(z1^2+1)"],
    "x_bar": [0.0],
    "bderiv": {"at": [0.0], "matrix_exprs": [["0"]]},
    "sampling": {"R_z": 10.0, "N_z": 512, "seed": 0, "extra_z": [[-1.0], [1.0]]},
}

IDENTITY_ORTHANT = {
    "name": "identity-orthant",
    "dims": {"n": 2, "m": 2},
    "cone": {"type": "orthant", "dim": 2},
    "K": {"type": "orthant", "dim": 2},
    "f": ["x1", "x2"],
    "x_bar": [0.0, 0.0],
    "bderiv": {"matrix_exprs": [["1", "0"], ["0", "1"]]},
    "sampling": {"R_z": 10.0, "N_z": 512, "seed": 0},
}

IDENTITY_PLANE = {
    "name": "identity-plane",
    "dims": {"n": 2, "m": 2},
    "cone": {"type": "orthant", "dim": 2},
    "K": {"type": "whole", "dim": 2},
    "f": ["x1", "x2"],
    "x_bar": [0.0, 0.0],
    "bderiv": {"matrix_exprs": [["1", "0"], ["0", "1"]]},
    "sampling": {"R_z": 10.0, "N_z": 512, "seed": 0},
}

SEPARABLE_BOX = {
    "name": "separable-box",
    "dims": {"n": 2, "m": 2},
    "cone": {"type": "orthant", "dim": 2},
    "K": {"A": [[1, 0], [0, 1], [-1, 0], [0, -1]], "b": [0, 0, -1, -1]},
    "f": ["x1 - z1", "x2 - z2"],
    "x_bar": [1.0, 1.0],
    "bderiv": {"matrix_exprs": [["1", "0"], ["0", "1"]]},
    "sampling": {"R_z": 0.75, "N_z": 256, "seed": 0, "center": [0.5, 0.5]},
}

HALFLINE_QUAL = {
    "name": "halfline-qual",
    "dims": {"n": 2, "m": 2},
    "cone": {"type": "orthant", "dim": 2},
    "K": {"A": [[1, 0], [0, 1], [0, -1]], "b": [0, 0, 0]},
    "f": ["x1", "x2"],
    "x_bar": [0.0, 0.0],
    "bderiv": {"matrix_exprs": [["1", "0"], ["0", "1"]]},
    "sampling": {"R_z": 10.0, "N_z": 512, "seed": 0},
}

_VEP = {
    "ex31": EX31,
    "ex32": EX32,
    "identity-orthant": IDENTITY_ORTHANT,
    "identity-plane": IDENTITY_PLANE,
    "separable-box": SEPARABLE_BOX,
    "halfline-qual": HALFLINE_QUAL,
}

_MPVEC = {
    "ex31-lin": ("ex31", "x1 + x2", "linear"),
    "ex31-lin-neg": ("ex31", "-x1 - x2", "linear"),
    "ex31-l1": ("ex31", "abs(x1) + abs(x2)", "convex"),
    "ex31-negx1": ("ex31", "-x1", "linear"),
    "ex32-l1": ("ex32", "abs(x1)", "convex"),
    "identity-lin": ("identity-orthant", "x1 + x2", "linear"),
    "separable-lin": ("separable-box", "x1 + x2", "linear"),
    "halfline-lin": ("halfline-qual", "x1 + x2", "linear"),
}


def _wedge_rows(R):
    m_minus = 1 - 1 / (R ** 2 + 1)
    m_plus = 1 + 1 / (R ** 2 + 1)
    rows = np.array([[-m_minus, 1.0], [m_plus, -1.0]])
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


GOLDEN = {
    "ex31": {
        "f_at_origin": {"limit": [0.5, 0.5], "grid": [0.5, 0.5], "provenance": "worked"},
        "residual": {"limit": 0.0, "grid": 0.0, "provenance": "worked"},
        "inner_cone": {"limit": "diagonal ray {v >= 0 : v2 = v1}",
                       "grid": _wedge_rows(10.0).tolist(), "grid_params": {"R_z": 10.0},
                       "wedge_width_bound": 2 / 101, "provenance": "worked limit, derived grid rows"},
        "contingent_cone": {"limit": "R^2_+", "grid": "first-quadrant directions", "provenance": "worked"},
        "outer_cone": {"limit": "R^2_+", "grid": [[1.0, 0.0], [0.0, 1.0]], "provenance": "derived"},
        "family_at_zero": {"limit": [[0.0, 1.0], [2.0, -1.0]], "grid": [[0.0, 1.0], [2.0, -1.0]],
                           "provenance": "worked"},
        "error_bound": {"limit": "holds (Equi = K)", "grid": "holds trivially", "provenance": "worked"},
    },
    "ex32": {
        "residual": {"limit": "x^2/2", "grid": "x^2/2 (z = -1 in the sample)", "provenance": "derived"},
        "contingent_cone": {"limit": "{0}", "grid": "no member directions", "provenance": "worked"},
        "outer_cone": {"limit": "R", "grid": [], "provenance": "worked"},
        "inner_cone": {"limit": "R", "grid": [], "provenance": "worked"},
        "error_bound": {"limit": "fails", "grid": "kappa(delta) ~ 2/delta", "provenance": "derived"},
    },
    "identity-orthant": {
        "inner_cone": {"limit": "R^2_+", "grid": [[1.0, 0.0], [0.0, 1.0]], "provenance": "derived"},
        "outer_cone": {"limit": "R^2_+", "grid": [[1.0, 0.0], [0.0, 1.0]], "provenance": "derived"},
        "contingent_cone": {"limit": "R^2_+", "grid": "first-quadrant directions", "provenance": "derived"},
        "error_bound": {"limit": "holds", "grid": "holds trivially", "provenance": "derived"},
    },
    "identity-plane": {
        "error_bound": {"limit": "holds", "grid": "kappa ~ 1", "provenance": "derived"},
    },
    "separable-box": {
        "equilibria": {"limit": [[1.0, 1.0]], "grid": [[1.0, 1.0]], "provenance": "derived"},
    },
    "halfline-qual": {
        "qualification": {"limit": "fails", "grid": "fails", "provenance": "derived"},
    },
    "ex31-lin": {"noc": "holds", "local_min": "strict local min"},
    "ex31-lin-neg": {"noc": "violated", "local_min": "not a local min"},
    "ex31-l1": {"noc": "vacuous", "soc": "holds", "soc_witness": [1.0, 1.0], "local_min": "strict local min"},
    "ex31-negx1": {"noc": "violated", "soc": "fails", "local_min": "not a local min"},
    "ex32-l1": {"noc": "vacuous", "soc": "fails", "local_min": "strict local min (isolated)"},
}


def names(kind=None):
    if kind == "vep":
        return sorted(_VEP)
    if kind == "mpvec":
        return sorted(_MPVEC)
    return sorted(_VEP) + sorted(_MPVEC)


def problem_document(name):
    """The problem-file document behind a registry entry."""
    if name in _VEP:
        return copy.deepcopy(_VEP[name])
    if name in _MPVEC:
        base, expr, structure = _MPVEC[name]
        doc = copy.deepcopy(_VEP[base])
        doc["name"] = name
        doc["objective"] = {"expr": expr, "structure": structure}
        return doc
    raise KeyError(f"unknown example {name!r}; available: {', '.join(names())}")


def load_example(name, seed=None):
    """Registry instance: a VepInstance, or an MpvecInstance for objective-carrying entries."""
    doc = problem_document(name)
    doc["metadata"] = {"golden": golden(name)}
    inst, mp = load_problem(doc, seed=seed)
    return mp if mp is not None else inst


def golden(name):
    if name in GOLDEN:
        return copy.deepcopy(GOLDEN[name])
    if name in _MPVEC:
        return {}
    raise KeyError(f"unknown example {name!r}")
