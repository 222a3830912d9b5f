"""Block-structured multi-stage multi-scenario multi-objective linear model.

Every node of the scenario tree owns

* a list of constraint rows that may reference the decisions of the node
  itself and of all its ancestors (stage 0 through the node's stage), and
* one objective contribution per objective, again over the ancestor chain.

A meta-objective value is the sum of the contributions met along a path
from the root, so per-node contributions may telescope (for example "funds
after this stage minus funds after the previous stage").
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from msmo.errors import (
    CoverageError,
    PrefixMismatchError,
    RangeError,
    ShapeMismatchError,
    WidthMismatchError,
)
from msmo.lattice import MetaObjectiveId, ScenarioPath, ScenarioTree
from msmo.lp import LPProblem

TERMINAL = "terminal-path"
CUMULATIVE = "per-stage-cumulative"
SCORING_MODES = (TERMINAL, CUMULATIVE)


@dataclass(frozen=True)
class ConstraintRow:
    """One row ``sum_s coeffs[s] @ x^s  relation  rhs`` along a node's ancestry."""

    coeffs: tuple
    relation: str
    rhs: float
    name: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(np.asarray(c, dtype=float).reshape(-1) for c in self.coeffs))
        if self.relation not in ("<=", "=", ">="):
            raise ValueError(f"unknown relation {self.relation!r}")


@dataclass
class StageBlocks:
    """Coefficient blocks keyed by tree node.

    ``widths[t]`` is the number of decision variables at stage t.
    ``objectives[node]`` is a sequence of ``(m, widths[s])`` arrays, one per
    ancestor stage s = 0..level(node).
    """

    widths: tuple
    constraints: dict = field(default_factory=dict)
    objectives: dict = field(default_factory=dict)
    var_names: Optional[Sequence] = None

    def row_counts(self, tree: ScenarioTree) -> list:
        """Rows per stage R_0..R_{T-1}, summed over that stage's nodes."""
        counts = [0] * tree.stage_count
        for node, rows in self.constraints.items():
            counts[len(node)] += len(rows)
        return counts


class MetaDecision(dict):
    """Decision vector per tree node (``()`` holds the stage-0 decision)."""

    def copy(self) -> "MetaDecision":
        return MetaDecision({k: np.array(v, dtype=float) for k, v in self.items()})


@dataclass(frozen=True)
class ObjectiveMatrix:
    """Objective values, ``values[i, k]`` for objective i+1 on column path k."""

    values: np.ndarray
    paths: tuple
    senses: tuple

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (len(self.senses), len(self.paths)):
            raise ShapeMismatchError(f"values shape {vals.shape} != ({len(self.senses)}, {len(self.paths)})")
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return len(self.senses)

    def entry(self, objective: int, path) -> float:
        states = path.states if isinstance(path, ScenarioPath) else tuple(path)
        for k, p in enumerate(self.paths):
            if p.states == states:
                return float(self.values[objective - 1, k])
        raise KeyError(states)

    def restrict(self, paths) -> "ObjectiveMatrix":
        wanted = [p.states if isinstance(p, ScenarioPath) else tuple(p) for p in paths]
        idx = [next(k for k, p in enumerate(self.paths) if p.states == w) for w in wanted]
        return ObjectiveMatrix(self.values[:, idx], tuple(self.paths[k] for k in idx), self.senses)

    def scaled(self, factor: float) -> "ObjectiveMatrix":
        return ObjectiveMatrix(self.values * factor, self.paths, self.senses)

    def as_vector(self) -> np.ndarray:
        """Path-major, objective-minor (the meta-objective order)."""
        return self.values.T.reshape(-1).copy()

    def minimization_frame(self) -> np.ndarray:
        sign = np.array([1.0 if s == "min" else -1.0 for s in self.senses])
        return self.values * sign[:, None]


class Dominance(str, Enum):
    DOMINATES = "dominates"
    DOMINATED_BY = "dominated_by"
    INCOMPARABLE = "incomparable"
    EQUAL = "equal"


def dominates(a: ObjectiveMatrix, b: ObjectiveMatrix, senses: Optional[Sequence] = None, tol: float = 0.0) -> Dominance:
    """Pareto comparison of ``a`` against ``b`` over all (objective, path) entries."""
    if a.values.shape != b.values.shape:
        raise ShapeMismatchError(f"{a.values.shape} vs {b.values.shape}")
    senses = tuple(senses) if senses is not None else a.senses
    if len(senses) != a.m:
        raise ShapeMismatchError("one sense per objective required")
    sign = np.array([1.0 if s == "min" else -1.0 for s in senses])[:, None]
    diff = (a.values - b.values) * sign  # negative: a better
    a_better = bool(np.any(diff < -tol))
    b_better = bool(np.any(diff > tol))
    if a_better and not b_better:
        return Dominance.DOMINATES
    if b_better and not a_better:
        return Dominance.DOMINATED_BY
    if a_better and b_better:
        return Dominance.INCOMPARABLE
    return Dominance.EQUAL


def _node_label(node: tuple) -> str:
    return "_".join(str(s) for s in node) if node else "root"


@dataclass(frozen=True, eq=False)
class MSMOModel:
    tree: ScenarioTree
    blocks: StageBlocks
    m: int
    senses: tuple
    scoring: str = TERMINAL
    nonnegative: bool = True

    # -- indexing --------------------------------------------------------
    @cached_property
    def node_offset(self) -> dict:
        off, col = {}, 0
        for node in self.tree.nodes():
            off[node] = col
            col += self.blocks.widths[len(node)]
        return off

    @property
    def num_columns(self) -> int:
        last = self.tree.nodes()[-1]
        return self.node_offset[last] + self.blocks.widths[len(last)]

    @cached_property
    def var_index(self) -> dict:
        """(stage, node, j) -> flat column."""
        return {
            (len(node), node, j): off + j
            for node, off in self.node_offset.items()
            for j in range(self.blocks.widths[len(node)])
        }

    def column(self, node: tuple, j: int) -> int:
        return self.node_offset[tuple(node)] + j

    @cached_property
    def var_names(self) -> list:
        names = []
        local = self.blocks.var_names
        for node in self.tree.nodes():
            t = len(node)
            for j in range(self.blocks.widths[t]):
                base = local[t][j] if local is not None else f"x{t}_{j}"
                names.append(f"{base}_{_node_label(node)}")
        return names

    # -- meta-objectives ---------------------------------------------------
    @cached_property
    def scored_nodes(self) -> tuple:
        """Paths (nodes) that carry meta-objectives under the scoring mode."""
        if self.scoring == TERMINAL:
            return self.tree.paths
        return tuple(ScenarioPath(states=n, index=k) for k, n in enumerate(self.tree.nodes()))

    @cached_property
    def meta_ids(self) -> tuple:
        return tuple(MetaObjectiveId(i, p) for p in self.scored_nodes for i in range(1, self.m + 1))

    @property
    def sense_sign(self) -> np.ndarray:
        return np.array([1.0 if s == "min" else -1.0 for s in self.senses])

    # -- dense assembly ----------------------------------------------------
    def _ancestry_columns(self, node: tuple) -> list:
        return [range(self.node_offset[node[:s]], self.node_offset[node[:s]] + self.blocks.widths[s]) for s in range(len(node) + 1)]

    @cached_property
    def _structural(self):
        rows, rels, rhs, names = [], [], [], []
        N = self.num_columns
        for node in self.tree.nodes():
            spans = self._ancestry_columns(node)
            for k, row in enumerate(self.blocks.constraints.get(node, ())):
                v = np.zeros(N)
                for s, coeffs in enumerate(row.coeffs):
                    v[spans[s].start : spans[s].stop] += coeffs
                rows.append(v)
                rels.append(row.relation)
                rhs.append(row.rhs)
                names.append(f"{row.name or 'r' + str(k)}_{_node_label(node)}")
        A = np.array(rows) if rows else np.zeros((0, N))
        return A, rels, np.array(rhs, dtype=float), names

    @cached_property
    def node_objective(self) -> dict:
        """node -> (m, N) matrix of that node's objective contribution."""
        N = self.num_columns
        out = {}
        for node in self.tree.nodes():
            mat = np.zeros((self.m, N))
            blocks = self.blocks.objectives.get(node)
            if blocks is not None:
                spans = self._ancestry_columns(node)
                for s, c in enumerate(blocks):
                    mat[:, spans[s].start : spans[s].stop] += np.asarray(c, dtype=float).reshape(self.m, -1)
            out[node] = mat
        return out

    @cached_property
    def objective_coefficients(self) -> np.ndarray:
        """(K*m, N) matrix: meta-objective value = row @ x, natural sense."""
        rows = []
        for p in self.scored_nodes:
            acc = np.zeros((self.m, self.num_columns))
            for t in range(len(p.states) + 1):
                acc += self.node_objective[p.states[:t]]
            rows.append(acc)
        return np.vstack(rows) if rows else np.zeros((0, self.num_columns))

    @property
    def num_structural_rows(self) -> int:
        return self._structural[0].shape[0]

    def structural_lp(self, cost=None, sense: str = "min") -> LPProblem:
        A, rels, rhs, names = self._structural
        N = self.num_columns
        return LPProblem(
            cost=np.zeros(N) if cost is None else cost,
            A=A.copy(),
            relations=list(rels),
            rhs=rhs.copy(),
            lower=np.zeros(N) if self.nonnegative else np.full(N, -np.inf),
            upper=np.full(N, np.inf),
            sense=sense,
            var_names=list(self.var_names),
            row_names=list(names),
        )

    # -- decisions ---------------------------------------------------------
    def flatten(self, d: MetaDecision) -> np.ndarray:
        x = np.zeros(self.num_columns)
        missing = [n for n in self.tree.nodes() if n not in d]
        if missing:
            raise CoverageError(f"decision lacks nodes {missing[:3]!r}{'...' if len(missing) > 3 else ''}")
        for node, off in self.node_offset.items():
            v = np.asarray(d[node], dtype=float).reshape(-1)
            w = self.blocks.widths[len(node)]
            if v.size != w:
                raise CoverageError(f"node {node!r} expects {w} values, got {v.size}")
            x[off : off + w] = v
        return x

    def unflatten(self, x) -> MetaDecision:
        x = np.asarray(x, dtype=float)
        return MetaDecision(
            {node: x[off : off + self.blocks.widths[len(node)]].copy() for node, off in self.node_offset.items()}
        )

    def zero_decision(self) -> MetaDecision:
        return self.unflatten(np.zeros(self.num_columns))


def assemble(
    tree: ScenarioTree,
    blocks: StageBlocks,
    m: int,
    senses: Sequence = None,
    scoring: str = TERMINAL,
    nonnegative: bool = True,
) -> MSMOModel:
    """Validate ``blocks`` against ``tree`` and build the model."""
    if m < 1:
        raise RangeError("objective count m must be >= 1")
    senses = tuple(senses) if senses is not None else ("min",) * m
    if len(senses) != m or any(s not in ("min", "max") for s in senses):
        raise ShapeMismatchError(f"need {m} senses from {{'min', 'max'}}, got {senses!r}")
    if scoring not in SCORING_MODES:
        raise ValueError(f"scoring must be one of {SCORING_MODES}")
    widths = blocks.widths
    if isinstance(widths, int):
        widths = (widths,) * tree.stage_count
    widths = tuple(int(w) for w in widths)
    if len(widths) != tree.stage_count or any(w < 1 for w in widths):
        raise WidthMismatchError(f"need one positive width per stage ({tree.stage_count}), got {widths}")
    if blocks.var_names is not None:
        if len(blocks.var_names) != tree.stage_count or any(
            len(blocks.var_names[t]) != widths[t] for t in range(tree.stage_count)
        ):
            raise WidthMismatchError("var_names must list one name per stage variable")

    for node, rows in blocks.constraints.items():
        node = tuple(node)
        if not tree.has_node(node):
            raise PrefixMismatchError(f"constraint block for unknown node {node!r}")
        for row in rows:
            if len(row.coeffs) != len(node) + 1:
                raise WidthMismatchError(f"row at {node!r} must carry {len(node) + 1} stage blocks")
            for s, c in enumerate(row.coeffs):
                if c.size != widths[s]:
                    raise WidthMismatchError(f"row at {node!r}: stage {s} block width {c.size} != {widths[s]}")
    for node, blks in blocks.objectives.items():
        node = tuple(node)
        if not tree.has_node(node):
            raise PrefixMismatchError(f"objective block for unknown node {node!r}")
        if len(blks) != len(node) + 1:
            raise WidthMismatchError(f"objective at {node!r} must carry {len(node) + 1} stage blocks")
        for s, c in enumerate(blks):
            if np.shape(c) != (m, widths[s]):
                raise WidthMismatchError(f"objective at {node!r}: stage {s} block shape {np.shape(c)} != {(m, widths[s])}")

    clean = StageBlocks(
        widths=widths,
        constraints={tuple(k): list(v) for k, v in blocks.constraints.items()},
        objectives={tuple(k): tuple(np.asarray(c, dtype=float) for c in v) for k, v in blocks.objectives.items()},
        var_names=None if blocks.var_names is None else tuple(tuple(v) for v in blocks.var_names),
    )
    return MSMOModel(tree=tree, blocks=clean, m=m, senses=senses, scoring=scoring, nonnegative=nonnegative)


def count_dimensions(model: MSMOModel) -> tuple:
    """(meta-objective count, structural constraint count) as instantiated."""
    return len(model.meta_ids), model.num_structural_rows


def uniform_counts(branching: Sequence, m: int, row_counts: Sequence) -> tuple:
    """Closed-form counts for uniform branching p(1..T-1) and rows R_0..R_{T-1}."""
    prods, acc = [], 1
    for p in branching:
        acc *= p
        prods.append(acc)
    objectives = (sum(prods) + 1) * m
    constraints = row_counts[0] + sum(r * q for r, q in zip(row_counts[1:], prods))
    return objectives, constraints


def evaluate(model: MSMOModel, d: MetaDecision) -> ObjectiveMatrix:
    """Meta-objective values of ``d``; one column per scored path."""
    x = model.flatten(d) if not isinstance(d, np.ndarray) else np.asarray(d, dtype=float)
    vec = model.objective_coefficients @ x
    values = vec.reshape(len(model.scored_nodes), model.m).T
    return ObjectiveMatrix(values, tuple(model.scored_nodes), model.senses)


def prefix_model(model: MSMOModel, keep_stages: int) -> MSMOModel:
    """Model restricted to stages ``0..keep_stages-1``."""
    T = model.tree.stage_count
    if not 2 <= keep_stages <= T:
        raise RangeError(f"keep_stages must lie in [2, {T}], got {keep_stages}")
    if keep_stages == T:
        return model
    tree = model.tree.truncate(keep_stages)
    b = model.blocks
    blocks = StageBlocks(
        widths=b.widths[:keep_stages],
        constraints={n: rows for n, rows in b.constraints.items() if len(n) < keep_stages},
        objectives={n: o for n, o in b.objectives.items() if len(n) < keep_stages},
        var_names=None if b.var_names is None else b.var_names[:keep_stages],
    )
    return assemble(tree, blocks, model.m, model.senses, model.scoring, model.nonnegative)


def check_decision(model: MSMOModel, d: MetaDecision, tol: float = 1e-7):
    """Violation report of ``d`` against the model's structural system."""
    from msmo.lp import check_point

    return check_point(model.structural_lp(), model.flatten(d), tol)


def same_structure(a: MSMOModel, b: MSMOModel) -> bool:
    """Coefficient-exact equality of rows, bounds and meta-objectives."""
    if a.num_columns != b.num_columns or a.senses != b.senses:
        return False
    if [p.states for p in a.scored_nodes] != [p.states for p in b.scored_nodes]:
        return False
    la, lb = a.structural_lp(), b.structural_lp()
    return (
        la.A.shape == lb.A.shape
        and np.array_equal(la.A, lb.A)
        and la.relations == lb.relations
        and np.array_equal(la.rhs, lb.rhs)
        and np.array_equal(la.lower, lb.lower)
        and np.array_equal(a.objective_coefficients, b.objective_coefficients)
    )
