"""Model builders for the sequential portfolio problem.

Non-terminal stages decide transfers ``x[i, j]`` (j < n: move from option i
to option j, j == n: withdraw from option i), 6 per option.  The terminal
stage only withdraws (``w[i]``) or holds (``h[i]``).  Balance rows say that
what leaves option i, including penalties ``(1 + p_ij)``, equals what is
available in option i: the initial funds at stage 0, afterwards everything
that was moved into i at the previous stage grown by option i's growth in the
realised state.  All money is scaled to millions.

Objective 1 is the fund left invested after the last stage's withdrawals,
objective 2 the cumulative withdrawal; both are maximised.  Objective 1 is
written per node as a telescoping difference of holdings so that a truncated
model scores the funds after its own last stage.
"""

from __future__ import annotations

import numpy as np

from msmo.errors import InvalidInstanceError, NotOptimalError
from msmo.horizon import residual_model
from msmo.lattice import ScenarioTree
from msmo.model import TERMINAL, ConstraintRow, MetaDecision, MSMOModel, StageBlocks, assemble, evaluate, prefix_model
from msmo.portfolio.instance import MONEY_SCALE, PortfolioInstance
from msmo.rgp import ReferencePoint, solve_reference

FUND, WITHDRAWAL = 1, 2


def transfer_index(n: int, i: int, j: int) -> int:
    """Column of ``x[i, j]`` inside a non-terminal stage block."""
    return i * (n + 1) + j


def _transfer_row(inst, state, i) -> np.ndarray:
    n = inst.n_options
    row = np.zeros(n * (n + 1))
    loss = inst.loss(state)
    for j in range(n + 1):
        row[transfer_index(n, i, j)] = 1.0 + loss[i, j]
    return row


def _inflow_row(inst, state, i) -> np.ndarray:
    """Grown funds arriving in option i from the previous transfer block."""
    n = inst.n_options
    row = np.zeros(n * (n + 1))
    g = inst.growth(state)[i]
    for j in range(n):
        row[transfer_index(n, j, i)] = 1.0 + g
    return row


def _terminal_row(inst, state, i) -> np.ndarray:
    n = inst.n_options
    row = np.zeros(2 * n)
    row[i] = 1.0 + inst.loss(state)[i, n]
    row[n + i] = 1.0
    return row


def _holdings(n) -> np.ndarray:
    v = np.zeros(n * (n + 1))
    for i in range(n):
        for j in range(n):
            v[transfer_index(n, i, j)] = 1.0
    return v


def _withdrawals(n) -> np.ndarray:
    v = np.zeros(n * (n + 1))
    for i in range(n):
        v[transfer_index(n, i, n)] = 1.0
    return v


def _local_names(inst, terminal: bool) -> list:
    if terminal:
        return [f"w_{o}" for o in inst.options] + [f"h_{o}" for o in inst.options]
    names = []
    for o in inst.options:
        names.extend(f"x_{o}_{d}" for d in (*inst.options, "W"))
    return names


def build_model(inst: PortfolioInstance, stage_count: int | None = None) -> MSMOModel:
    """Portfolio model over ``stage_count`` stages (default: the instance's)."""
    T = stage_count or inst.stage_count
    if T < 2:
        raise InvalidInstanceError("portfolio models need at least two stages")
    if T > inst.stage_count or len(inst.min_withdrawal) < T:
        raise InvalidInstanceError(f"instance only describes {inst.stage_count} stages")
    base_tree = inst.tree()
    tree: ScenarioTree = base_tree if T == base_tree.stage_count else base_tree.truncate(T)
    n = inst.n_options
    wn, tn = n * (n + 1), 2 * n
    widths = tuple([wn] * (T - 1) + [tn])
    H, W = _holdings(n), _withdrawals(n)
    zero = [np.zeros(w) for w in widths]
    floor = [w / MONEY_SCALE for w in inst.min_withdrawal]
    cap = inst.max_withdrawal / MONEY_SCALE if inst.enforce_max_withdrawal else None

    constraints, objectives = {}, {}
    for node in tree.nodes():
        t = len(node)
        state = node[-1] if node else inst.root_state
        terminal = t == T - 1
        rows = []
        for i in range(n):
            coeffs = list(zero[: t + 1])
            if terminal:
                coeffs[t] = _terminal_row(inst, state, i)
            else:
                coeffs[t] = _transfer_row(inst, state, i)
            if t == 0:
                rhs = inst.initial_funds[i] / MONEY_SCALE
            else:
                coeffs[t - 1] = -_inflow_row(inst, state, i)
                rhs = 0.0
            rows.append(ConstraintRow(tuple(coeffs), "=", rhs, f"bal_{inst.options[i]}"))
        wvec = np.concatenate([np.ones(n), np.zeros(n)]) if terminal else W
        coeffs = list(zero[: t + 1])
        coeffs[t] = wvec
        rows.append(ConstraintRow(tuple(coeffs), ">=", floor[t], "minw"))
        if cap is not None:
            rows.append(ConstraintRow(tuple(coeffs), "<=", cap, "maxw"))
        constraints[node] = rows

        obj = [np.zeros((2, w)) for w in widths[: t + 1]]
        if terminal:
            obj[t][0, n:] = 1.0
            obj[t][1, :n] = 1.0
        else:
            obj[t][0] = H
            obj[t][1] = W
        if t > 0:
            obj[t - 1][0] -= H
        objectives[node] = tuple(obj)

    names = [_local_names(inst, False)] * (T - 1) + [_local_names(inst, True)]
    blocks = StageBlocks(widths=widths, constraints=constraints, objectives=objectives, var_names=names)
    return assemble(tree, blocks, 2, ("max", "max"), TERMINAL)


def build_three_stage(inst: PortfolioInstance) -> MSMOModel:
    if inst.stage_count < 3:
        raise InvalidInstanceError("instance describes fewer than three stages")
    return build_model(inst, 3)


def build_two_stage(inst: PortfolioInstance) -> MSMOModel:
    """Two-stage model: transfers at stage 0, withdraw-or-hold at stage 1."""
    return build_model(inst, 2)


def two_stage_embedding(inst: PortfolioInstance) -> dict:
    """Map terminal stage-1 columns of the two-stage model onto the
    non-terminal stage-1 block of the three-stage model: ``w[i] -> x[i, W]``
    and ``h[i] -> x[i, i]``.  Off-diagonal transfers have no image."""
    n = inst.n_options
    out = {}
    for i in range(n):
        out[i] = transfer_index(n, i, n)
        out[n + i] = transfer_index(n, i, i)
    return out


def embedded_columns(inst: PortfolioInstance, two: MSMOModel, truncated: MSMOModel) -> np.ndarray:
    """Column of ``truncated`` holding each column of the two-stage model ``two``."""
    emb = two_stage_embedding(inst)
    cols = []
    for node in two.tree.nodes():
        off = truncated.node_offset[node]
        width = two.blocks.widths[len(node)]
        cols.extend(off + (emb[j] if node else j) for j in range(width))
    return np.array(cols, dtype=int)


def truncation_mismatches(inst: PortfolioInstance) -> list:
    """Differences between the two-stage model and the three-stage model cut
    after stage 1, read through :func:`two_stage_embedding`.  Empty when the
    rows, right-hand sides, bounds and meta-objectives agree exactly."""
    two = build_two_stage(inst)
    cut = prefix_model(build_three_stage(inst), 2)
    problems = []
    if [m.label for m in two.meta_ids] != [m.label for m in cut.meta_ids]:
        problems.append("meta-objectives differ")
    if two.tree.nodes() != cut.tree.nodes():
        return problems + ["trees differ"]
    cols = embedded_columns(inst, two, cut)
    a, b = two.structural_lp(), cut.structural_lp()
    checks = (
        ("row coefficients", a.A, b.A[:, cols]),
        ("right-hand sides", a.rhs, b.rhs),
        ("lower bounds", a.lower, b.lower[cols]),
        ("objective coefficients", two.objective_coefficients, cut.objective_coefficients[:, cols]),
    )
    for name, x, y in checks:
        if x.shape != y.shape or not np.array_equal(x, y):
            problems.append(f"{name} differ")
    if a.relations != b.relations:
        problems.append("row relations differ")
    return problems


# -- goals -----------------------------------------------------------------
def path_goals(inst: PortfolioInstance, staged_states) -> tuple:
    """(fund goal, cumulative withdrawal goal) for ``[(stage, state), ...]``.

    The fund goal is that of the last stage/state; the withdrawal goal sums
    the goals met along the way.
    """
    last_stage, last_state = staged_states[-1]
    fund = inst.fund_goal(last_stage, last_state)
    withdraw = sum(inst.withdrawal_goal(t, s) for t, s in staged_states)
    return fund, withdraw


def goal_vector(inst: PortfolioInstance, model: MSMOModel, first_stage: int = 0, anchor=None) -> np.ndarray:
    """Goals aligned with ``model.meta_ids``.

    ``first_stage`` is the absolute stage of the model's root and ``anchor``
    the state realised there (the instance's root state for stage 0).
    """
    anchor = inst.root_state if anchor is None else anchor
    out = []
    for mid in model.meta_ids:
        staged = [(first_stage, anchor)] + [(first_stage + 1 + k, s) for k, s in enumerate(mid.path.states)]
        fund, withdraw = path_goals(inst, staged)
        out.append(fund if mid.objective == FUND else withdraw)
    return np.array(out)


def three_stage_reference(inst: PortfolioInstance, model: MSMOModel, weight: float = 1.0, epsilon: float = 1e-4, overrides=None) -> ReferencePoint:
    return _reference(inst, model, 0, None, weight, epsilon, overrides)


def first_stage_reference(inst: PortfolioInstance, model: MSMOModel, weight: float = 1.0, epsilon: float = 1e-4, overrides=None) -> ReferencePoint:
    """Reference point for the first two-stage model (``model`` already truncated)."""
    return _reference(inst, model, 0, None, weight, epsilon, overrides)


def residual_references(inst: PortfolioInstance, model: MSMOModel, weight: float = 1.0, epsilon: float = 1e-4, overrides=None) -> dict:
    """Per stage-1 state reference points for the residual models of ``model``.

    Residual paths start at stage 1, so stage-0 withdrawal goals are left out.
    """
    out = {}
    for k1 in model.tree.children(()):
        sub = residual_model(model, np.zeros(model.blocks.widths[0]), k1)
        out[k1] = _reference(inst, sub, 1, k1, weight, epsilon, overrides, prefix=(k1,))
    return out


def _reference(inst, model, first_stage, anchor, weight, epsilon, overrides, prefix=()):
    goals = goal_vector(inst, model, first_stage, anchor)
    weights = np.full(goals.size, float(weight))
    for k, mid in enumerate(model.meta_ids):
        key = prefix + tuple(mid.path.states)
        for table, arr in ((overrides or {}).get("goals", {}), goals), ((overrides or {}).get("weights", {}), weights):
            for cand in ((mid.objective, key), (mid.objective, "*"), ("*", key)):
                if cand in table:
                    arr[k] = float(table[cand])
                    break
    return ReferencePoint(goals, weights, epsilon)


# -- reporting -------------------------------------------------------------
def to_money(value_millions) -> np.ndarray:
    return np.asarray(value_millions, dtype=float) * MONEY_SCALE


def round_display(value) -> np.ndarray:
    """Round currency amounts to the nearest 100."""
    return np.round(np.asarray(value, dtype=float) / 100.0) * 100.0


def path_withdrawals(inst: PortfolioInstance, model: MSMOModel, d: MetaDecision) -> dict:
    """Per path, the withdrawal made at every stage (currency units)."""
    n = inst.n_options
    T = model.tree.stage_count
    W = _withdrawals(n)
    out = {}
    for path in model.tree.paths:
        amounts = []
        for t in range(T):
            x = np.asarray(d[path.states[:t]], dtype=float)
            amounts.append(float(x[:n].sum() if t == T - 1 else W @ x) * MONEY_SCALE)
        out[path.states] = amounts
    return out


def solution_table(inst: PortfolioInstance, model: MSMOModel, d: MetaDecision, title: str = "solution") -> str:
    """Text table: stage holdings per node, then remained fund and withdrawals per path."""
    n = inst.n_options
    T = model.tree.stage_count
    lines = [title, ""]
    head = "node".ljust(12) + "".join(o.rjust(14) for o in inst.options) + "withdraw".rjust(14)
    lines.append(head)
    for node in model.tree.nodes():
        if len(node) == T - 1:
            continue
        x = np.asarray(d[node], dtype=float).reshape(n, n + 1)
        held = x[:, :n].sum(axis=0) * MONEY_SCALE  # funds arriving in each option
        label = ",".join(node) or inst.root_state
        lines.append(
            label.ljust(12)
            + "".join(f"{v:14.0f}" for v in round_display(held))
            + f"{round_display(x[:, n].sum() * MONEY_SCALE):14.0f}"
        )
    lines += ["", "path".ljust(6) + "states".ljust(12) + "remained".rjust(14)
              + "".join(f"withdraw_t{t}".rjust(14) for t in range(T))]
    matrix = evaluate(model, d)
    wd = path_withdrawals(inst, model, d)
    for k, path in enumerate(model.tree.paths):
        remained = matrix.values[FUND - 1, k] * MONEY_SCALE
        lines.append(
            f"s{k + 1}".ljust(6) + ",".join(path.states).ljust(12)
            + f"{round_display(remained):14.0f}"
            + "".join(f"{round_display(v):14.0f}" for v in wd[path.states])
        )
    return "\n".join(lines) + "\n"


SENSITIVITY_ALLOCATIONS = (
    (1_000_000, 1_000_000, 1_000_000, 1_000_000, 1_000_000),
    (5_000_000, 0, 0, 0, 0),
    (2_000_000, 2_000_000, 0, 0, 1_000_000),
    (1_250_000, 1_250_000, 0, 0, 2_500_000),
    (0, 0, 2_500_000, 2_500_000, 0),
)


def initial_fund_sensitivity(inst: PortfolioInstance, allocations=SENSITIVITY_ALLOCATIONS, weight: float = 1.0, epsilon: float = 1e-4) -> list:
    """Solve the three-stage model for several initial placements of the capital.

    Returns one dict per allocation with its status, phi and money-valued
    objective matrix (None when not solved).
    """
    rows = []
    for alloc in allocations:
        variant = inst.with_changes(initial_funds=tuple(alloc), initial_capital=int(sum(alloc)))
        model = build_three_stage(variant)
        try:
            res = solve_reference(model, three_stage_reference(variant, model, weight, epsilon))
            rows.append(dict(allocation=tuple(alloc), status="optimal", phi=res.phi,
                             matrix=res.objective_matrix.scaled(MONEY_SCALE)))
        except NotOptimalError as exc:
            rows.append(dict(allocation=tuple(alloc), status=str(exc.status.value), phi=None, matrix=None))
    return rows
