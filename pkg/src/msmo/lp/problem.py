"""Dense single-objective LP container and feasibility checking."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from msmo.errors import DimensionMismatchError, MalformedProblemError

RELATIONS = ("<=", "=", ">=")
_REL_ALIASES = {"<=": "<=", "=<": "<=", "≤": "<=", "=": "=", "==": "=", ">=": ">=", "=>": ">=", "≥": ">="}


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass
class LPProblem:
    """``sense  cost @ x`` subject to ``A[r] @ x  relations[r]  rhs[r]`` and bounds.

    Lower bounds default to 0 and upper bounds to +inf; a free variable has
    bounds ``(-inf, +inf)``.
    """

    cost: np.ndarray
    A: np.ndarray
    relations: list
    rhs: np.ndarray
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    sense: str = "min"
    var_names: Optional[list] = None
    row_names: Optional[list] = None

    def __post_init__(self):
        self.cost = np.asarray(self.cost, dtype=float).reshape(-1)
        n = self.cost.size
        A = np.asarray(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, n)
        if A.ndim != 2 or A.shape[1] != n:
            raise MalformedProblemError(f"constraint matrix shape {A.shape} does not match {n} variables")
        self.A = A
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        if self.rhs.size != A.shape[0]:
            raise MalformedProblemError(f"{A.shape[0]} rows but {self.rhs.size} right-hand sides")
        rels = []
        for r in self.relations:
            try:
                rels.append(_REL_ALIASES[r])
            except KeyError:
                raise MalformedProblemError(f"unknown relation {r!r}") from None
        if len(rels) != A.shape[0]:
            raise MalformedProblemError(f"{A.shape[0]} rows but {len(rels)} relations")
        self.relations = rels
        self.lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float).reshape(-1)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float).reshape(-1)
        if self.lower.size != n or self.upper.size != n:
            raise MalformedProblemError("bound vectors must have one entry per variable")
        if self.sense not in ("min", "max"):
            raise MalformedProblemError(f"sense must be 'min' or 'max', got {self.sense!r}")
        for label, arr in (("cost", self.cost), ("constraint", A), ("rhs", self.rhs)):
            if not np.all(np.isfinite(arr)):
                raise MalformedProblemError(f"non-finite {label} coefficient")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise MalformedProblemError("NaN bound")
        if np.any(self.lower == np.inf) or np.any(self.upper == -np.inf):
            raise MalformedProblemError("lower bound +inf or upper bound -inf")
        if np.any(self.lower > self.upper):
            raise MalformedProblemError("lower bound exceeds upper bound")
        if self.var_names is None:
            self.var_names = [f"x{j}" for j in range(n)]
        if len(self.var_names) != n:
            raise MalformedProblemError("one variable name per column required")
        if self.row_names is None:
            self.row_names = [f"c{r}" for r in range(A.shape[0])]
        if len(self.row_names) != A.shape[0]:
            raise MalformedProblemError("one row name per constraint required")

    @property
    def num_vars(self) -> int:
        return self.cost.size

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    @property
    def rows(self) -> list:
        """Rows as ``(coefficients, relation, rhs)`` triples."""
        return [(self.A[r], self.relations[r], self.rhs[r]) for r in range(self.num_rows)]

    @classmethod
    def from_rows(cls, cost, rows: Sequence, **kwargs) -> "LPProblem":
        cost = np.asarray(cost, dtype=float)
        if rows:
            A = np.array([np.asarray(r[0], dtype=float) for r in rows])
        else:
            A = np.zeros((0, cost.size))
        return cls(cost=cost, A=A, relations=[r[1] for r in rows], rhs=[r[2] for r in rows], **kwargs)

    def objective(self, point) -> float:
        return float(self.cost @ np.asarray(point, dtype=float))


@dataclass
class SolveResult:
    status: Status
    point: Optional[np.ndarray] = None
    objective_value: Optional[float] = None
    iterations: int = 0
    ray: Optional[np.ndarray] = None  # improving direction when unbounded

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass
class ViolationReport:
    """Violations larger than the tolerance, keyed by row / variable index."""

    rows: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return not self.rows and not self.bounds

    @property
    def max_violation(self) -> float:
        vals = list(self.rows.values()) + list(self.bounds.values())
        return max(vals, default=0.0)

    def __len__(self):
        return len(self.rows) + len(self.bounds)

    def __bool__(self):
        return not self.feasible


def row_violations(A, relations, rhs, x) -> np.ndarray:
    act = A @ x
    viol = np.zeros(len(relations))
    for r, rel in enumerate(relations):
        if rel == "<=":
            viol[r] = max(0.0, act[r] - rhs[r])
        elif rel == ">=":
            viol[r] = max(0.0, rhs[r] - act[r])
        else:
            viol[r] = abs(act[r] - rhs[r])
    return viol


def check_point(p: LPProblem, point, tol: float = 1e-7) -> ViolationReport:
    """Report every row or bound violated by more than ``tol``."""
    x = np.asarray(point, dtype=float).reshape(-1)
    if x.size != p.num_vars:
        raise DimensionMismatchError(f"point has {x.size} entries, problem has {p.num_vars} variables")
    report = ViolationReport()
    for r, v in enumerate(row_violations(p.A, p.relations, p.rhs, x)):
        if v > tol:
            report.rows[r] = float(v)
    bound_viol = np.maximum(p.lower - x, 0.0) + np.maximum(x - p.upper, 0.0)
    for j in np.flatnonzero(bound_viol > tol):
        report.bounds[int(j)] = float(bound_viol[j])
    return report
