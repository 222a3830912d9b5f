import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from generators import chain_toy, random_model
from msmo.errors import CoverageError, InfeasibleInputError, NonpositiveWeightError, NotOptimalError
from msmo.lattice import build_tree
from msmo.lp import Status, solve
from msmo.model import ConstraintRow, MetaDecision, StageBlocks, assemble, check_decision
from msmo.rgp import ReferencePoint, extract, scalarize, solve_reference, verify_pareto


def single_min_model(rhs=3.0, relation=">="):
    """One path, one objective: min x subject to x (relation) rhs."""
    tree = build_tree(2, [["a"]], [{}])
    blocks = StageBlocks(
        widths=(1, 1),
        constraints={(): [ConstraintRow((np.ones(1),), relation, rhs)]},
        objectives={(): (np.ones((1, 1)),), ("a",): (np.zeros((1, 1)), np.zeros((1, 1)))},
    )
    return assemble(tree, blocks, 1, ("min",))


def test_attainable_goal_gives_zero_deviation():
    res = solve_reference(single_min_model(), ReferencePoint.uniform([3.0]))
    assert res.decision[()][0] == pytest.approx(3.0)
    assert res.deviations[0] == pytest.approx(0.0, abs=1e-9)
    assert res.phi == pytest.approx(0.0, abs=1e-9)


def test_unattainable_goal_deviation():
    res = solve_reference(single_min_model(), ReferencePoint.uniform([2.0], epsilon=1e-4))
    assert res.deviations[0] == pytest.approx(1.0)
    assert res.phi == pytest.approx(1.0)
    assert res.psi == pytest.approx(1.0 + 1e-4)


def test_scalarized_layout():
    model = single_min_model()
    lp = scalarize(model, ReferencePoint.uniform([2.0]))
    N = model.num_columns
    assert lp.num_vars == N + 2
    assert lp.num_rows == model.num_structural_rows + 2
    assert lp.lower[N] == -np.inf and lp.lower[N + 1] == -np.inf
    assert lp.var_names[-1] == "phi"


def test_extract_raises_on_infeasible_model():
    model = single_min_model(rhs=-1.0, relation="<=")
    lp = scalarize(model, ReferencePoint.uniform([0.0]))
    res = solve(lp)
    assert res.status is Status.INFEASIBLE
    with pytest.raises(NotOptimalError):
        extract(model, lp, res)


def test_reference_point_validation():
    with pytest.raises(NonpositiveWeightError):
        ReferencePoint([1.0], [0.0])
    with pytest.raises(NonpositiveWeightError):
        ReferencePoint([1.0], [1.0], epsilon=0.0)
    with pytest.raises(CoverageError):
        ReferencePoint([1.0, 2.0], [1.0])
    with pytest.raises(CoverageError):
        scalarize(single_min_model(), ReferencePoint.uniform([1.0, 2.0]))


def test_reference_from_mapping_wildcards():
    model, _ = random_model(np.random.default_rng(3), m=2)
    first = model.meta_ids[0]
    ref = ReferencePoint.from_mapping(
        model,
        {(1, "*"): 5.0, ("*", "*"): 1.0, (first.objective, first.path.states): -2.0},
        {(2, "*"): 3.0},
    )
    for k, mid in enumerate(model.meta_ids):
        expected = -2.0 if k == 0 else 5.0 if mid.objective == 1 else 1.0
        assert ref.goals[k] == expected
        assert ref.weights[k] == (3.0 if mid.objective == 2 else 1.0)
    with pytest.raises(CoverageError):
        ReferencePoint.from_mapping(model, {(1, "*"): 1.0})


def test_chain_toy_phi_is_max_weighted_deviation():
    model = chain_toy()
    ref = ReferencePoint([0.25], [2.0])
    res = solve_reference(model, ref)
    assert res.phi == pytest.approx(float(np.max(ref.weights * res.deviations)), abs=1e-9)
    assert res.decision[()][0] == pytest.approx(0.5)


def test_verify_pareto_examples():
    model = single_min_model()
    assert verify_pareto(model, MetaDecision({(): [3.0], ("a",): [0.0]}))
    check = verify_pareto(model, MetaDecision({(): [4.0], ("a",): [0.0]}))
    assert not check
    assert check.dominating[()][0] == pytest.approx(3.0)
    with pytest.raises(InfeasibleInputError):
        verify_pareto(model, MetaDecision({(): [1.0], ("a",): [0.0]}))


def _check_invariants(model, ref, res):
    sign = np.tile(model.sense_sign, len(model.scored_nodes))
    z = res.objective_matrix.as_vector() * sign
    np.testing.assert_allclose(z - res.deviations, ref.goals * sign, atol=1e-6)
    wd = ref.weights * res.deviations
    assert res.phi == pytest.approx(wd.max(), abs=1e-6)
    assert res.psi == pytest.approx(res.phi + ref.epsilon * wd.sum(), abs=1e-6)


def _random_reference(rng, model, spread=3.0):
    goals = rng.uniform(-spread, spread, len(model.meta_ids))
    weights = rng.uniform(0.5, 2.0, len(model.meta_ids))
    return ReferencePoint(goals, weights, float(rng.choice([1e-4, 1e-3, 1e-2])))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_scalarization_yields_pareto_points(seed):
    rng = np.random.default_rng(seed)
    model, _ = random_model(rng)
    ref = _random_reference(rng, model)
    res = solve_reference(model, ref)
    _check_invariants(model, ref, res)
    assert check_decision(model, res.decision).feasible
    assert verify_pareto(model, res.decision, tol=1e-6)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_relaxing_a_goal_never_increases_psi(seed):
    rng = np.random.default_rng(seed)
    model, _ = random_model(rng)
    ref = _random_reference(rng, model)
    k = int(rng.integers(len(model.meta_ids)))
    easier = ref.goals.copy()
    # easier means larger for minimised objectives, smaller for maximised ones
    sign = np.tile(model.sense_sign, len(model.scored_nodes))[k]
    easier[k] += sign * rng.uniform(0.1, 2.0)
    before = solve_reference(model, ref).psi
    after = solve_reference(model, ReferencePoint(easier, ref.weights, ref.epsilon)).psi
    assert after <= before + 1e-9


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), factor=st.floats(0.1, 10.0))
def test_common_weight_scale_keeps_selection(seed, factor):
    rng = np.random.default_rng(seed)
    model, _ = random_model(rng)
    ref = _random_reference(rng, model)
    a = solve_reference(model, ref)
    b = solve_reference(model, ReferencePoint(ref.goals, ref.weights * factor, ref.epsilon))
    assert b.psi == pytest.approx(factor * a.psi, rel=1e-7, abs=1e-7)
    np.testing.assert_allclose(a.objective_matrix.values, b.objective_matrix.values, atol=1e-6)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_maximisation_deviation_signs(seed):
    rng = np.random.default_rng(seed)
    model, _ = random_model(rng, senses=("max", "max"))
    ref = _random_reference(rng, model)
    res = solve_reference(model, ref)
    z = res.objective_matrix.as_vector()
    for k in range(len(z)):
        if z[k] < ref.goals[k] - 1e-9:
            assert res.deviations[k] >= -1e-9
        if res.deviations[k] <= 0:
            assert z[k] >= ref.goals[k] - 1e-9
