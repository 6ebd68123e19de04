"""First-order approximation cones and optimality checks for strong vector
equilibrium problems on polyhedral sets.

Typical use::

    from vepcone import load_example, AnalysisContext
    inst = load_example("ex31")
    report = AnalysisContext(inst).verify()
"""

from .approx import (AnalysisContext, AnalysisReport, NoEquilibriaError, NotEquilibriumError,
                     homogenized_solve, inner_cone, outer_cone, verify_inclusions)
from .cones import ConvexCone, Polyhedron
from .deriv import DerivativeFamily, ScalarFn
from .expr import ExprDomainError, ExprSyntaxError, parse
from .optimality import MpvecInstance, local_min_brute, noc_check, noc_decomposed, soc_check
from .problem import (EquiOracle, SamplingConfig, VepInstance, error_bound_probe, is_equilibrium,
                      residual)
from .problemfile import ProblemFileError, load_problem
from .registry import load_example

__version__ = "0.1.0"

__all__ = [
    "AnalysisContext", "AnalysisReport", "NoEquilibriaError", "NotEquilibriumError",
    "homogenized_solve", "inner_cone", "outer_cone", "verify_inclusions",
    "ConvexCone", "Polyhedron", "DerivativeFamily", "ScalarFn",
    "ExprDomainError", "ExprSyntaxError", "parse",
    "MpvecInstance", "local_min_brute", "noc_check", "noc_decomposed", "soc_check",
    "EquiOracle", "SamplingConfig", "VepInstance", "error_bound_probe", "is_equilibrium", "residual",
    "ProblemFileError", "load_problem", "load_example",
]
