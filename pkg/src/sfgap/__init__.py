"""Constructive Shapley-Folkman decompositions and duality-gap bounds for separable problems."""
from .config import CapExceeded, Caps, RunConfig, Tolerances
from .gapbounds import bound_report, solve_allocation
from .hulls import OutsideHull, PointSet, minimal_face
from .nonconvexity import RhoTable, SampledFunction
from .numlin import LpProblem, solve_lp
from .sfdecomp import decompose_epigraph, decompose_plain, decompose_refined

__version__ = "0.1.0"

__all__ = [
    "CapExceeded", "Caps", "RunConfig", "Tolerances", "bound_report", "solve_allocation",
    "OutsideHull", "PointSet", "minimal_face", "RhoTable", "SampledFunction", "LpProblem",
    "solve_lp", "decompose_epigraph", "decompose_plain", "decompose_refined",
]
