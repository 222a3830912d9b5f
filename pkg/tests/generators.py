"""Random instance generators shared by the test modules."""

from __future__ import annotations

import numpy as np

from msmo.lattice import build_tree
from msmo.lp import LPProblem
from msmo.model import TERMINAL, ConstraintRow, StageBlocks, assemble


def random_tree(rng, stage_count=3, max_states=3, anchored=None):
    """Random tree with parent-dependent branching; every state reachable."""
    stages = [[f"S{t}{k}" for k in range(rng.integers(1, max_states + 1))] for t in range(1, stage_count)]
    transitions = []
    for step in range(1, stage_count - 1):
        src, dst = stages[step - 1], stages[step]
        tmap = {s: set() for s in src}
        for d in dst:
            tmap[src[rng.integers(len(src))]].add(d)
        for s in src:
            if not tmap[s]:
                tmap[s].add(dst[rng.integers(len(dst))])
            extra = rng.integers(0, len(dst) + 1)
            tmap[s].update(rng.choice(dst, size=extra, replace=False).tolist())
        transitions.append({s: sorted(v) for s, v in tmap.items()})
    anchored = bool(rng.integers(2)) if anchored is None else anchored
    if anchored:
        first = {"R": stages[0]}
        return build_tree(stage_count, stages, [first] + transitions, "R")
    return build_tree(stage_count, stages, transitions)


def random_model(rng, stage_count=3, max_states=2, max_width=2, rows_per_node=2, m=2, senses=None, scoring=TERMINAL, box=4.0):
    """Random bounded block model that is feasible at a hidden point.

    Every node gets random rows over its ancestor chain plus a row capping
    the sum of its own variables, so the feasible region is a polytope.
    """
    tree = random_tree(rng, stage_count, max_states)
    widths = tuple(int(rng.integers(1, max_width + 1)) for _ in range(stage_count))
    hidden = {node: rng.uniform(0, 1, widths[len(node)]) for node in tree.nodes()}
    constraints, objectives = {}, {}
    for node in tree.nodes():
        t = len(node)
        chain = [hidden[node[:s]] for s in range(t + 1)]
        rows = []
        for r in range(int(rng.integers(1, rows_per_node + 1))):
            coeffs = tuple(rng.integers(-3, 4, widths[s]).astype(float) for s in range(t + 1))
            lhs = sum(c @ x for c, x in zip(coeffs, chain))
            rel = ("<=", ">=", "=")[int(rng.integers(3))]
            slack = float(rng.uniform(0, 1))
            rhs = lhs + slack if rel == "<=" else lhs - slack if rel == ">=" else lhs
            rows.append(ConstraintRow(coeffs, rel, float(rhs), f"r{r}"))
        cap = tuple(np.zeros(widths[s]) for s in range(t)) + (np.ones(widths[t]),)
        rows.append(ConstraintRow(cap, "<=", box, "cap"))
        constraints[node] = rows
        objectives[node] = tuple(rng.integers(-3, 4, (m, widths[s])).astype(float) for s in range(t + 1))
    senses = senses or tuple(("min", "max")[int(rng.integers(2))] for _ in range(m))
    blocks = StageBlocks(widths=widths, constraints=constraints, objectives=objectives)
    model = assemble(tree, blocks, m, senses, scoring)
    return model, hidden


def random_small_lp(rng, max_vars=6, max_rows=6):
    """Small LP over a box, with random rows and relations (may be infeasible)."""
    n = int(rng.integers(1, max_vars + 1))
    k = int(rng.integers(1, max_rows + 1))
    A = rng.integers(-4, 5, (k, n)).astype(float)
    rels = [("<=", ">=", "=")[int(rng.choice(3, p=[0.6, 0.3, 0.1]))] for _ in range(k)]
    rhs = rng.integers(-3, 8, k).astype(float)
    cost = rng.integers(-5, 6, n).astype(float)
    upper = rng.integers(1, 6, n).astype(float)
    lower = np.zeros(n)
    free_lo = rng.random(n) < 0.2
    lower[free_lo] = -rng.integers(1, 4, int(free_lo.sum()))
    return LPProblem(
        cost=cost, A=A, relations=rels, rhs=rhs, lower=lower, upper=upper,
        sense=("min", "max")[int(rng.integers(2))],
    )


def chain_toy(level1_cap: bool = False, objective: str = "max-x0"):
    """Single-scenario three-stage chain with one variable per stage.

    Rows: x0 <= 1; x0 - x1 <= 1; x0 + x1 + x2 <= 1/2.  With ``level1_cap``
    the level-1 node also carries x0 + x1 <= 1.  The default objective
    maximises x0, which pushes the first two-stage model to x0 = 1.
    """
    tree = build_tree(3, [["A"], ["B"]], [{"A": ["B"]}])
    one = lambda v: np.array([float(v)])
    level1 = [ConstraintRow((one(1), one(-1)), "<=", 1.0, "lag")]
    if level1_cap:
        level1.append(ConstraintRow((one(1), one(1)), "<=", 1.0, "cap"))
    constraints = {
        (): [ConstraintRow((one(1),), "<=", 1.0, "first")],
        ("A",): level1,
        ("A", "B"): [ConstraintRow((one(1), one(1), one(1)), "<=", 0.5, "total")],
    }
    c0 = np.array([[1.0]]) if objective == "max-x0" else np.zeros((1, 1))
    objectives = {
        (): (c0,),
        ("A",): (np.zeros((1, 1)), np.zeros((1, 1))),
        ("A", "B"): (np.zeros((1, 1)),) * 3,
    }
    blocks = StageBlocks(widths=(1, 1, 1), constraints=constraints, objectives=objectives)
    return assemble(tree, blocks, 1, ("max",), TERMINAL)


def feasible_points(model, rng, count=3):
    """Feasible flat points: LP vertices for random costs and their mixtures."""
    from msmo.lp import Status, solve

    base = model.structural_lp()
    pts = []
    for _ in range(count):
        res = solve(model.structural_lp(cost=rng.normal(size=base.num_vars)))
        if res.status is Status.OPTIMAL:
            pts.append(res.point)
    if len(pts) >= 2:
        w = rng.dirichlet(np.ones(len(pts)))
        pts.append(sum(wi * p for wi, p in zip(w, pts)))
    return pts
