"""Sequential portfolio case study: data, builders and robustness analysis."""

from msmo.portfolio.builders import (
    SENSITIVITY_ALLOCATIONS,
    build_model,
    build_three_stage,
    build_two_stage,
    first_stage_reference,
    goal_vector,
    initial_fund_sensitivity,
    path_withdrawals,
    residual_references,
    solution_table,
    three_stage_reference,
    two_stage_embedding,
    truncation_mismatches,
)
from msmo.portfolio.instance import MONEY_SCALE, PortfolioInstance, default_instance
from msmo.portfolio.published import published_matrix
from msmo.portfolio.robustness import RobustnessReport, profit, robustness_report

__all__ = [
    "SENSITIVITY_ALLOCATIONS",
    "MONEY_SCALE",
    "PortfolioInstance",
    "RobustnessReport",
    "build_model",
    "build_three_stage",
    "build_two_stage",
    "default_instance",
    "first_stage_reference",
    "goal_vector",
    "initial_fund_sensitivity",
    "path_withdrawals",
    "profit",
    "published_matrix",
    "residual_references",
    "robustness_report",
    "solution_table",
    "three_stage_reference",
    "two_stage_embedding",
    "truncation_mismatches",
]
