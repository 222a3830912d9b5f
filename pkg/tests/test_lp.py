import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from generators import random_small_lp
from oracles import dual_of, vertex_oracle
from msmo.errors import DimensionMismatchError, InvalidNameError, LPParseError, MalformedProblemError
from msmo.lp import LPProblem, SimplexOptions, Status, check_point, export_lp, parse_lp, solve


def x_at_least_3(sense="min"):
    return LPProblem(cost=[1.0], A=[[1.0]], relations=[">="], rhs=[3.0], sense=sense)


def test_minimize_x_at_least_three():
    res = solve(x_at_least_3())
    assert res.status is Status.OPTIMAL
    assert res.point[0] == pytest.approx(3.0)
    assert res.objective_value == pytest.approx(3.0)


def test_maximize_unbounded_with_ray():
    p = x_at_least_3("max")
    res = solve(p)
    assert res.status is Status.UNBOUNDED
    assert res.ray[0] > 0
    assert p.cost @ res.ray > 0


def test_free_variable_unbounded_below():
    p = LPProblem(cost=[1.0, 0.0], A=[[1.0, 1.0]], relations=["<="], rhs=[1.0], lower=[-np.inf, 0.0])
    res = solve(p)
    assert res.status is Status.UNBOUNDED
    assert p.cost @ res.ray < 0
    assert p.A @ res.ray <= 1e-12


def test_residual_with_negative_capacity_is_infeasible():
    # x1 <= 0, x1 + x2 <= -1/2 over x >= 0
    p = LPProblem(cost=[0.0, 0.0], A=[[1.0, 0.0], [1.0, 1.0]], relations=["<=", "<="], rhs=[0.0, -0.5])
    assert solve(p).status is Status.INFEASIBLE


def test_two_variable_textbook():
    # max 3x + 2y s.t. x + y <= 4, x + 3y <= 6, x <= 3
    p = LPProblem(cost=[3, 2], A=[[1, 1], [1, 3], [1, 0]], relations=["<="] * 3, rhs=[4, 6, 3], sense="max")
    res = solve(p)
    assert res.status is Status.OPTIMAL
    np.testing.assert_allclose(res.point, [3.0, 1.0], atol=1e-9)
    assert res.objective_value == pytest.approx(11.0)


def test_equality_and_bounds():
    p = LPProblem(
        cost=[1, 1], A=[[1, -1]], relations=["="], rhs=[1.0], lower=[-2.0, -np.inf], upper=[5.0, 0.5]
    )
    res = solve(p)
    assert res.status is Status.OPTIMAL
    np.testing.assert_allclose(res.point, [-2.0, -3.0], atol=1e-9)


def test_redundant_equalities():
    p = LPProblem(cost=[1, 2], A=[[1, 1], [2, 2]], relations=["=", "="], rhs=[1, 2])
    res = solve(p)
    assert res.status is Status.OPTIMAL
    assert res.objective_value == pytest.approx(1.0)


def test_degenerate_problem_terminates():
    # a classic cycling example under Dantzig's rule without anti-cycling
    p = LPProblem(
        cost=[-0.75, 150, -0.02, 6],
        A=[[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]],
        relations=["<="] * 3,
        rhs=[0, 0, 1],
    )
    res = solve(p, SimplexOptions(degeneracy_streak=2))
    assert res.status is Status.OPTIMAL
    assert res.objective_value == pytest.approx(-0.05)


def test_iteration_limit_is_reported():
    p = LPProblem(cost=[-1, -1, -1], A=[[1, 2, 3], [3, 2, 1]], relations=["<=", "<="], rhs=[6, 6])
    assert solve(p, SimplexOptions(max_iter=1)).status is Status.ITERATION_LIMIT


def test_malformed_problems():
    with pytest.raises(MalformedProblemError):
        LPProblem(cost=[1, 2], A=[[1.0]], relations=["<="], rhs=[1])
    with pytest.raises(MalformedProblemError):
        LPProblem(cost=[np.nan], A=[[1.0]], relations=["<="], rhs=[1])
    with pytest.raises(MalformedProblemError):
        LPProblem(cost=[1], A=[[1.0]], relations=["<>"], rhs=[1])


def test_check_point_reports():
    assert not check_point(x_at_least_3(), [3.0], tol=1e-9)
    chain = LPProblem(
        cost=[0, 0, 0], A=[[1, 0, 0], [1, -1, 0], [1, 1, 1]], relations=["<="] * 3, rhs=[1, 1, 0.5]
    )
    assert check_point(chain, [1 / 8] * 3).feasible
    report = check_point(chain, [1.0, 0.0, 0.0])
    assert report.max_violation == pytest.approx(0.5)
    assert list(report.rows) == [2]
    with pytest.raises(DimensionMismatchError):
        check_point(chain, [1.0])


def test_export_simple_text():
    text = export_lp(LPProblem(cost=[1.0], A=[[1.0]], relations=[">="], rhs=[3.0], var_names=["x"], row_names=["c"]))
    assert "Minimize" in text
    assert " obj: x" in text
    assert " c: x >= 3" in text
    assert text.strip().endswith("End")


def test_free_variable_marked_free():
    p = LPProblem(cost=[0, 1], A=[[1, 1]], relations=["<="], rhs=[1], lower=[0, -np.inf], var_names=["x", "delta"])
    assert " delta free" in export_lp(p)


def test_invalid_names():
    with pytest.raises(InvalidNameError):
        export_lp(LPProblem(cost=[1.0], A=[[1.0]], relations=["<="], rhs=[1], var_names=["bad name"]))
    with pytest.raises(InvalidNameError):
        export_lp(LPProblem(cost=[1, 1], A=[[1, 1]], relations=["<="], rhs=[1], var_names=["x", "x"]))


def test_parse_rejects_garbage():
    with pytest.raises(LPParseError):
        parse_lp("Minimize\n obj: x +\nEnd\n")


def _same_problem(a: LPProblem, b: LPProblem):
    assert a.sense == b.sense
    assert a.var_names == b.var_names and a.row_names == b.row_names
    assert a.relations == b.relations
    np.testing.assert_array_equal(a.cost, b.cost)
    np.testing.assert_array_equal(a.A, b.A)
    np.testing.assert_array_equal(a.rhs, b.rhs)
    np.testing.assert_array_equal(a.lower, b.lower)
    np.testing.assert_array_equal(a.upper, b.upper)


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_export_parse_round_trip(seed):
    rng = np.random.default_rng(seed)
    p = random_small_lp(rng)
    # non-integral coefficients exercise the repr path
    p.A = p.A * rng.choice([1.0, 0.1, 1 / 3], size=p.A.shape)
    p.upper = np.where(rng.random(p.num_vars) < 0.3, np.inf, p.upper)
    p.lower = np.where(rng.random(p.num_vars) < 0.2, -np.inf, p.lower)
    _same_problem(p, parse_lp(export_lp(p)))


def test_oracle_agreement_fixed_seed():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        p = random_small_lp(rng)
        res = solve(p)
        status, value = vertex_oracle(p)
        assert res.status is status
        if status is Status.OPTIMAL:
            assert res.objective_value == pytest.approx(value, abs=1e-6)
            assert check_point(p, res.point).feasible


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_oracle_agreement_property(seed):
    p = random_small_lp(np.random.default_rng(seed))
    res = solve(p)
    status, value = vertex_oracle(p)
    assert res.status is status
    if status is Status.OPTIMAL:
        assert res.objective_value == pytest.approx(value, abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_strong_duality(seed):
    rng = np.random.default_rng(seed)
    n, k = int(rng.integers(1, 6)), int(rng.integers(1, 6))
    A = rng.integers(-3, 5, (k, n)).astype(float)
    x0 = rng.uniform(0, 2, n)
    rels = [("<=", ">=", "=")[int(i)] for i in rng.integers(0, 3, k)]
    rhs = A @ x0 + np.array([{"<=": 1.0, ">=": -1.0, "=": 0.0}[r] for r in rels])
    cost = rng.integers(0, 5, n).astype(float)  # c >= 0 keeps the primal bounded below
    primal = LPProblem(cost=cost, A=A, relations=rels, rhs=rhs)
    pr, du = solve(primal), solve(dual_of(primal))
    assert pr.status is Status.OPTIMAL and du.status is Status.OPTIMAL
    assert pr.objective_value == pytest.approx(du.objective_value, abs=1e-6)
