"""Two-stage moving horizon over a three-stage window.

The first two-stage model (the three-stage model truncated after stage 1)
fixes the initial decision.  For every stage-1 branch the residual two-stage
model over (x1, x2) is then solved with right-hand sides reduced by the fixed
initial decision; its first block replaces the discarded x1 of the first model.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from msmo.errors import FirstStageInfeasibleError, NotOptimalError, RangeError, UnknownStateError
from msmo.lp import SimplexOptions, Status, check_point
from msmo.model import ConstraintRow, MetaDecision, MSMOModel, StageBlocks, assemble, prefix_model
from msmo.rgp import ReferencePoint, ScalarizationResult, solve_reference


def residual_model(model: MSMOModel, x0_star, k1) -> MSMOModel:
    """Model over the subtree of stage-1 state ``k1`` with the stage-0 decision fixed.

    Rows of stage >= 1 in that subtree keep their coefficients on x1, x2, ...
    while their right-hand side becomes ``b - A0 @ x0_star``.  Objective blocks
    keep only the stage >= 1 parts.
    """
    tree = model.tree
    if (k1,) not in [n for n in tree.nodes(1)]:
        raise UnknownStateError(f"{k1!r} is not a stage-1 state of the tree")
    x0 = np.asarray(x0_star, dtype=float).reshape(-1)
    if x0.size != model.blocks.widths[0]:
        raise RangeError(f"x0_star must have {model.blocks.widths[0]} entries")
    if tree.stage_count < 3:
        raise RangeError("residual models need at least three stages")
    sub = tree.subtree(k1)
    b = model.blocks
    constraints, objectives = {}, {}
    for node, rows in b.constraints.items():
        if len(node) >= 1 and node[0] == k1:
            constraints[node[1:]] = [
                ConstraintRow(row.coeffs[1:], row.relation, float(row.rhs - row.coeffs[0] @ x0), row.name)
                for row in rows
            ]
    for node, blks in b.objectives.items():
        if len(node) >= 1 and node[0] == k1:
            objectives[node[1:]] = tuple(blks[1:])
    blocks = StageBlocks(
        widths=b.widths[1:],
        constraints=constraints,
        objectives=objectives,
        var_names=None if b.var_names is None else b.var_names[1:],
    )
    return assemble(sub, blocks, model.m, model.senses, model.scoring, model.nonnegative)


@dataclass
class HorizonRun:
    first_stage: ScalarizationResult
    fixed_x0: np.ndarray
    residual_results: dict  # k1 -> ScalarizationResult | None
    residual_status: dict  # k1 -> Status
    composite: Optional[MetaDecision]
    partial: MetaDecision = field(default_factory=MetaDecision)

    @property
    def infeasible_branches(self) -> list:
        return [k for k, s in self.residual_status.items() if s is not Status.OPTIMAL]


def _lift(decision: MetaDecision, k1) -> dict:
    return {(k1,) + node: v for node, v in decision.items()}


def run_moving_horizon(
    model: MSMOModel,
    first_ref: ReferencePoint,
    residual_refs: Mapping,
    options: Optional[SimplexOptions] = None,
    max_workers: int = 1,
) -> HorizonRun:
    """Solve the first two-stage model, fix x0, then solve one residual per branch."""
    if model.tree.stage_count != 3:
        raise RangeError("the moving horizon is defined for three-stage models")
    first_model = prefix_model(model, 2)
    try:
        first = solve_reference(first_model, first_ref, options)
    except NotOptimalError as exc:
        raise FirstStageInfeasibleError(f"first two-stage model not solved: {exc.status}") from exc
    x0 = first.decision[()].copy()
    branches = list(model.tree.children(()))

    def solve_branch(k1):
        sub = residual_model(model, x0, k1)
        try:
            return k1, solve_reference(sub, residual_refs[k1], options), Status.OPTIMAL
        except NotOptimalError as exc:
            return k1, None, exc.status

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            outcomes = list(pool.map(solve_branch, branches))
    else:
        outcomes = [solve_branch(k) for k in branches]

    results, status = {}, {}
    partial = MetaDecision({(): x0.copy()})
    for k1, res, st in outcomes:
        results[k1] = res
        status[k1] = st
        if res is not None:
            partial.update(_lift(res.decision, k1))
    complete = all(s is Status.OPTIMAL for s in status.values())
    return HorizonRun(
        first_stage=first,
        fixed_x0=x0,
        residual_results=results,
        residual_status=status,
        composite=partial.copy() if complete else None,
        partial=partial,
    )


def check_mh_feasibility(model: MSMOModel, d: MetaDecision, tol: float = 1e-7) -> bool:
    """Feasibility of ``d`` for the two-stage moving horizon model.

    Requires (x0, x1) to satisfy the first two-stage model and, for every
    stage-1 branch k1, the sub-decision below k1 to satisfy the residual model
    built from d's own x0.
    """
    first = prefix_model(model, 2)
    head = MetaDecision({n: d[n] for n in first.tree.nodes()})
    if not check_point(first.structural_lp(), first.flatten(head), tol).feasible:
        return False
    x0 = np.asarray(d[()], dtype=float)
    for k1 in model.tree.children(()):
        sub = residual_model(model, x0, k1)
        tail = MetaDecision({node: d[(k1,) + node] for node in sub.tree.nodes()})
        if not check_point(sub.structural_lp(), sub.flatten(tail), tol).feasible:
            return False
    return True
