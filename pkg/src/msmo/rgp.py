"""Augmented reference-point goal programming over meta-objectives.

All objectives are brought to a minimisation frame (maximised objectives and
their goals are negated), so a positive deviation always means "worse than
the goal".  The scalarised LP is

    min  phi + eps * sum_k w_k d_k
    s.t. structural rows of the model
         z_k(x) - d_k = g_k          for every meta-objective k
         w_k d_k - phi <= 0          for every meta-objective k
         x >= 0,  d, phi free

LP column layout: model columns, then one deviation per meta-objective, then
``phi``.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from typing import Optional

import numpy as np

from msmo.errors import CoverageError, InfeasibleInputError, NonpositiveWeightError, NotOptimalError
from msmo.lattice import MetaObjectiveId
from msmo.lp import LPProblem, SimplexOptions, SolveResult, Status, check_point, solve
from msmo.model import MetaDecision, MSMOModel, ObjectiveMatrix, evaluate

DEFAULT_EPSILON = 1e-4
DEFAULT_WEIGHT = 1.0


@dataclass(frozen=True)
class ReferencePoint:
    """Aspiration levels and weights aligned with ``model.meta_ids``.

    Goals are given in the objectives' natural sense and units.
    """

    goals: np.ndarray
    weights: np.ndarray
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        g = np.asarray(self.goals, dtype=float).reshape(-1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size != g.size:
            raise CoverageError(f"{g.size} goals but {w.size} weights")
        if not np.all(np.isfinite(g)):
            raise CoverageError("goals must be finite")
        if np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise NonpositiveWeightError("every weight must be strictly positive")
        if not (self.epsilon > 0 and np.isfinite(self.epsilon)):
            raise NonpositiveWeightError("epsilon must be strictly positive")
        object.__setattr__(self, "goals", g)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, goals, weight: float = DEFAULT_WEIGHT, epsilon: float = DEFAULT_EPSILON) -> "ReferencePoint":
        g = np.asarray(goals, dtype=float).reshape(-1)
        return cls(g, np.full(g.size, float(weight)), epsilon)

    @classmethod
    def from_mapping(
        cls,
        model: MSMOModel,
        goals: Mapping,
        weights: Optional[Mapping] = None,
        epsilon: float = DEFAULT_EPSILON,
        default_weight: float = DEFAULT_WEIGHT,
    ) -> "ReferencePoint":
        """Build from ``{(objective, path_states): value}`` mappings.

        Either key component may be ``"*"`` to act as a default; the most
        specific key wins.
        """
        g = [_lookup(goals, mid) for mid in model.meta_ids]
        missing = [mid.label for mid, v in zip(model.meta_ids, g) if v is None]
        if missing:
            raise CoverageError(f"no goal for {missing[:4]}{'...' if len(missing) > 4 else ''}")
        w = [
            (_lookup(weights, mid) if weights else None) for mid in model.meta_ids
        ]
        w = [default_weight if v is None else v for v in w]
        return cls(np.array(g, dtype=float), np.array(w, dtype=float), epsilon)


def _lookup(table: Mapping, mid: MetaObjectiveId):
    states = tuple(mid.path.states)
    for key in (mid, (mid.objective, states), (mid.objective, "*"), ("*", states), ("*", "*")):
        if key in table:
            return float(table[key])
    return None


@dataclass
class ScalarizationResult:
    decision: MetaDecision
    deviations: np.ndarray
    phi: float
    psi: float
    objective_matrix: ObjectiveMatrix
    meta_ids: tuple
    solve_result: Optional[SolveResult] = None

    def deviation(self, objective: int, path_states) -> float:
        for k, mid in enumerate(self.meta_ids):
            if mid.objective == objective and mid.path.states == tuple(path_states):
                return float(self.deviations[k])
        raise KeyError((objective, path_states))


def _normalized_objectives(model: MSMOModel):
    """Meta-objective coefficient rows and per-row sign for the min frame."""
    C = model.objective_coefficients
    sign = np.tile(model.sense_sign, len(model.scored_nodes))
    return C * sign[:, None], sign


def scalarize(model: MSMOModel, ref: ReferencePoint) -> LPProblem:
    """Single augmented minimax LP for ``model`` under reference point ``ref``."""
    K = len(model.meta_ids)
    if ref.goals.size != K:
        raise CoverageError(f"reference point covers {ref.goals.size} meta-objectives, model has {K}")
    base = model.structural_lp()
    N = model.num_columns
    Cn, sign = _normalized_objectives(model)
    g = ref.goals * sign
    w = ref.weights

    total = N + K + 1
    A_struct = np.hstack([base.A, np.zeros((base.num_rows, K + 1))])
    A_goal = np.hstack([Cn, -np.eye(K), np.zeros((K, 1))])
    A_lin = np.hstack([np.zeros((K, N)), np.diag(w), -np.ones((K, 1))])
    cost = np.zeros(total)
    cost[N : N + K] = ref.epsilon * w
    cost[-1] = 1.0

    labels = [f"Z{mid.objective}_{'_'.join(map(str, mid.path.states)) or 'root'}" for mid in model.meta_ids]
    return LPProblem(
        cost=cost,
        A=np.vstack([A_struct, A_goal, A_lin]),
        relations=list(base.relations) + ["="] * K + ["<="] * K,
        rhs=np.concatenate([base.rhs, g, np.zeros(K)]),
        lower=np.concatenate([base.lower, np.full(K + 1, -np.inf)]),
        upper=np.full(total, np.inf),
        sense="min",
        var_names=list(base.var_names) + [f"dev_{s}" for s in labels] + ["phi"],
        row_names=list(base.row_names) + [f"goal_{s}" for s in labels] + [f"minmax_{s}" for s in labels],
    )


def extract(model: MSMOModel, lp: LPProblem, res: SolveResult) -> ScalarizationResult:
    """Unpack a solved scalarisation into decision, deviations, phi and psi."""
    if res.status is not Status.OPTIMAL:
        raise NotOptimalError(res.status)
    N, K = model.num_columns, len(model.meta_ids)
    if lp.num_vars != N + K + 1:
        raise CoverageError("LP layout does not match the model")
    x = res.point
    decision = model.unflatten(x[:N])
    return ScalarizationResult(
        decision=decision,
        deviations=x[N : N + K].copy(),
        phi=float(x[-1]),
        psi=float(res.objective_value),
        objective_matrix=evaluate(model, decision),
        meta_ids=model.meta_ids,
        solve_result=res,
    )


def solve_reference(model: MSMOModel, ref: ReferencePoint, options: Optional[SimplexOptions] = None) -> ScalarizationResult:
    lp = scalarize(model, ref)
    return extract(model, lp, solve(lp, options))


@dataclass
class ParetoCheck:
    is_pareto: bool
    improvement: float
    dominating: Optional[MetaDecision] = None

    def __bool__(self):
        return self.is_pareto


def verify_pareto(
    model: MSMOModel,
    d: MetaDecision,
    tol: float = 1e-6,
    feas_tol: float = 1e-7,
    options: Optional[SimplexOptions] = None,
) -> ParetoCheck:
    """Solve the improvement LP ``max sum(s)`` s.t. z(x) + s = z(d), s >= 0.

    ``d`` is Pareto optimal iff the optimal slack sum is at most ``tol``;
    otherwise the optimal ``x`` dominates ``d`` and is returned.
    """
    base = model.structural_lp()
    xd = model.flatten(d)
    report = check_point(base, xd, feas_tol)
    if not report.feasible:
        raise InfeasibleInputError(f"decision violates the model (max violation {report.max_violation:.3g})")
    N, K = model.num_columns, len(model.meta_ids)
    Cn, _ = _normalized_objectives(model)
    target = Cn @ xd

    def build(cap: Optional[float]):
        A = np.vstack(
            [np.hstack([base.A, np.zeros((base.num_rows, K))]), np.hstack([Cn, np.eye(K)])]
        )
        return LPProblem(
            cost=np.concatenate([np.zeros(N), np.ones(K)]),
            A=A,
            relations=list(base.relations) + ["="] * K,
            rhs=np.concatenate([base.rhs, target]),
            lower=np.concatenate([base.lower, np.zeros(K)]),
            upper=np.concatenate([base.upper, np.full(K, np.inf if cap is None else cap)]),
            sense="max",
        )

    res = solve(build(None), options)
    if res.status is Status.UNBOUNDED:
        res = solve(build(1.0), options)
        if res.status is Status.OPTIMAL:
            return ParetoCheck(False, np.inf, model.unflatten(res.point[:N]))
    if res.status is not Status.OPTIMAL:
        raise NotOptimalError(res.status, f"improvement LP failed with status {res.status}")
    gain = float(res.objective_value)
    if gain <= tol:
        return ParetoCheck(True, gain)
    return ParetoCheck(False, gain, model.unflatten(res.point[:N]))
