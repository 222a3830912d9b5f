import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from generators import chain_toy, feasible_points, random_model
from msmo.errors import FirstStageInfeasibleError, RangeError, UnknownStateError
from msmo.horizon import check_mh_feasibility, residual_model, run_moving_horizon
from msmo.lattice import build_tree
from msmo.lp import Status, check_point, solve
from msmo.model import ConstraintRow, MetaDecision, StageBlocks, assemble, prefix_model
from msmo.rgp import ReferencePoint, solve_reference


def toy_decision(x0, x1, x2):
    return MetaDecision({(): [x0], ("A",): [x1], ("A", "B"): [x2]})


def test_residual_after_full_first_move_is_infeasible():
    res = residual_model(chain_toy(level1_cap=True), [1.0], "A")
    lp = res.structural_lp()
    np.testing.assert_array_equal(lp.A, [[-1, 0], [1, 0], [1, 1]])
    np.testing.assert_array_equal(lp.rhs, [0.0, 0.0, -0.5])
    assert solve(lp).status is Status.INFEASIBLE


def test_residual_after_small_first_move_is_feasible():
    lp = residual_model(chain_toy(level1_cap=True), [1 / 8], "A").structural_lp()
    np.testing.assert_allclose(lp.rhs, [7 / 8, 7 / 8, 3 / 8])
    assert solve(lp).status is Status.OPTIMAL


def test_residual_of_literal_chain():
    lp = residual_model(chain_toy(), [1.0], "A").structural_lp()
    np.testing.assert_array_equal(lp.A, [[-1, 0], [1, 1]])
    np.testing.assert_array_equal(lp.rhs, [0.0, -0.5])
    assert solve(lp).status is Status.INFEASIBLE


def test_zero_fix_keeps_right_hand_sides():
    model, _ = random_model(np.random.default_rng(8))
    k1 = model.tree.children(())[0]
    sub = residual_model(model, np.zeros(model.blocks.widths[0]), k1)
    for node, rows in sub.blocks.constraints.items():
        original = model.blocks.constraints[(k1,) + node]
        assert [r.rhs for r in rows] == [r.rhs for r in original]


def test_residual_errors():
    model = chain_toy()
    with pytest.raises(UnknownStateError):
        residual_model(model, [0.0], "Z")
    with pytest.raises(RangeError):
        residual_model(model, [0.0, 1.0], "A")


@pytest.mark.parametrize("variant", [False, True])
def test_chain_mh_feasibility(variant):
    model = chain_toy(level1_cap=variant)
    assert check_mh_feasibility(model, toy_decision(1 / 8, 1 / 8, 1 / 8)) is True
    for x1, x2 in [(0.0, 0.0), (0.3, 0.0), (0.0, 2.0)]:
        assert check_mh_feasibility(model, toy_decision(1.0, x1, x2)) is False


def test_chain_run_reports_infeasible_residual():
    model = chain_toy()
    first = prefix_model(model, 2)
    run = run_moving_horizon(
        model,
        ReferencePoint.uniform([1.0] * len(first.meta_ids)),
        {"A": ReferencePoint.uniform([0.0])},
    )
    assert run.fixed_x0[0] == pytest.approx(1.0)
    assert run.residual_status == {"A": Status.INFEASIBLE}
    assert run.composite is None
    assert run.infeasible_branches == ["A"]
    np.testing.assert_array_equal(run.partial[()], run.fixed_x0)


def test_first_stage_failure_raises():
    tree = build_tree(3, [["a"], ["b"]], [{"a": ["b"]}])
    one = np.ones(1)
    blocks = StageBlocks(
        (1, 1, 1),
        {(): [ConstraintRow((one,), ">=", 2.0), ConstraintRow((one,), "<=", 1.0)]},
        {(): (np.ones((1, 1)),), ("a",): (np.zeros((1, 1)),) * 2, ("a", "b"): (np.zeros((1, 1)),) * 3},
    )
    model = assemble(tree, blocks, 1)
    with pytest.raises(FirstStageInfeasibleError):
        run_moving_horizon(model, ReferencePoint.uniform([0.0]), {"a": ReferencePoint.uniform([0.0])})


def test_zero_impact_third_stage_reproduces_two_stage_plan():
    tree = build_tree(3, [["a", "b"], ["c"]], [{"a": ["c"], "b": ["c"]}])
    one = np.ones(1)
    zero = np.zeros((1, 1))
    constraints = {(): [ConstraintRow((one,), "<=", 1.0)]}
    objectives = {(): (np.array([[2.0]]),)}
    for s in ("a", "b"):
        constraints[(s,)] = [ConstraintRow((one, one), "=", 1.0)]
        objectives[(s,)] = (zero, np.ones((1, 1)))
        constraints[(s, "c")] = [ConstraintRow((0 * one, 0 * one, one), "<=", 1.0)]
        objectives[(s, "c")] = (zero, zero, zero)
    model = assemble(tree, StageBlocks((1, 1, 1), constraints, objectives), 1, ("max",))
    first = prefix_model(model, 2)
    plain = solve_reference(first, ReferencePoint.uniform([5.0] * len(first.meta_ids)))
    refs = {s: ReferencePoint.uniform([5.0]) for s in ("a", "b")}
    run = run_moving_horizon(model, ReferencePoint.uniform([5.0] * len(first.meta_ids)), refs)
    for node in first.tree.nodes():
        np.testing.assert_allclose(run.composite[node], plain.decision[node], atol=1e-9)


def _random_refs(rng, model):
    first = prefix_model(model, 2)
    first_ref = ReferencePoint.uniform(rng.uniform(-2, 2, len(first.meta_ids)))
    refs = {}
    for k1 in model.tree.children(()):
        sub = residual_model(model, np.zeros(model.blocks.widths[0]), k1)
        refs[k1] = ReferencePoint.uniform(rng.uniform(-2, 2, len(sub.meta_ids)))
    return first_ref, refs


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), workers=st.sampled_from([1, 3]))
def test_composite_consistency(seed, workers):
    rng = np.random.default_rng(seed)
    model, _ = random_model(rng)
    first_ref, refs = _random_refs(rng, model)
    try:
        run = run_moving_horizon(model, first_ref, refs, max_workers=workers)
    except FirstStageInfeasibleError:
        pytest.fail("first model is feasible by construction")
    assert list(run.residual_status) == list(model.tree.children(()))
    if run.composite is None:
        assert run.infeasible_branches
        return
    np.testing.assert_array_equal(run.composite[()], run.fixed_x0)
    for k1, res in run.residual_results.items():
        np.testing.assert_array_equal(run.composite[(k1,)], res.decision[()])
    assert check_mh_feasibility(model, run.composite)


def _candidates(model, hidden, rng):
    """Mix of feasible points and perturbations of them."""
    pts = [model.flatten(MetaDecision(hidden))] + feasible_points(model, rng, 2)
    out = list(pts)
    for p in pts:
        out.append(np.maximum(p + rng.normal(0, 0.3, p.size), 0.0))
        out.append(rng.uniform(0, 2, p.size))
    return out


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_mh_feasibility_matches_full_feasibility(seed):
    rng = np.random.default_rng(seed)
    model, hidden = random_model(rng)
    full = model.structural_lp()
    for x in _candidates(model, hidden, rng):
        expected = check_point(full, x, 1e-7).feasible
        assert check_mh_feasibility(model, model.unflatten(x), 1e-7) is expected
