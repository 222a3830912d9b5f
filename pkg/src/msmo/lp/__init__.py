"""Dense LP representation, two-phase simplex solver and LP text interchange."""

from msmo.lp.lpformat import export_lp, parse_lp
from msmo.lp.problem import LPProblem, SolveResult, Status, ViolationReport, check_point
from msmo.lp.simplex import SimplexOptions, solve

__all__ = [
    "LPProblem",
    "SimplexOptions",
    "SolveResult",
    "Status",
    "ViolationReport",
    "check_point",
    "export_lp",
    "parse_lp",
    "solve",
]
