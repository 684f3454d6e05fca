import numpy as np
import pytest

from ma_isac.qcqp import (
    ConvexProgram,
    QuadConstraint,
    feasibility_check,
    solve,
    strictly_feasible_point,
)

from oracles import grid_search_oracle, random_fat_program


def box_program(c, half_width=1.0):
    n = len(c)
    return ConvexProgram(
        c=np.asarray(c, float),
        lower=-half_width * np.ones(n),
        upper=half_width * np.ones(n),
    )


def test_lp_box_saturates_signs():
    c = np.array([1.0, -2.0, 0.5, -0.1])
    result = solve(box_program(c), np.zeros(4))
    assert result.status == "optimal"
    np.testing.assert_allclose(result.d, np.sign(c), atol=1e-6)


def test_single_ball_constraint_analytic():
    rng = np.random.default_rng(0)
    for _ in range(5):
        n = int(rng.integers(2, 7))
        c = rng.standard_normal(n)
        radius = rng.uniform(0.3, 0.9)
        program = ConvexProgram(
            c=c,
            quad_constraints=(QuadConstraint(np.eye(n), np.zeros(n), -(radius**2)),),
            lower=-np.ones(n),
            upper=np.ones(n),
        )
        result = solve(program, np.zeros(n))
        expected = radius * np.linalg.norm(c)
        assert abs(result.objective - expected) <= 1e-9 * (1 + expected)


def test_random_programs_match_grid_oracle():
    rng = np.random.default_rng(1)
    for _ in range(25):
        n = int(rng.integers(2, 5))
        program = random_fat_program(rng, n)
        result = solve(program, np.zeros(n))
        oracle_val, _ = grid_search_oracle(program)
        assert abs(result.objective - oracle_val) <= 1e-6
        assert feasibility_check(program, result.d).max_violation <= 1e-8


def test_objective_never_below_start():
    rng = np.random.default_rng(2)
    for _ in range(20):
        program = random_fat_program(rng, int(rng.integers(2, 6)))
        start = np.zeros(program.n)
        result = solve(program, start)
        assert result.objective >= float(program.c @ start) - 1e-12


def test_barrier_stage_objectives_monotone():
    rng = np.random.default_rng(3)
    program = random_fat_program(rng, 4)
    result = solve(program, np.zeros(4))
    diffs = np.diff(result.stage_objectives)
    assert np.all(diffs >= -1e-9 * (1 + np.abs(result.objective)))


def test_infeasible_start_reported():
    program = box_program(np.ones(3))
    result = solve(program, np.array([2.0, 0.0, 0.0]))
    assert result.status == "infeasible"


def test_feasibility_check_interior_and_faces():
    program = ConvexProgram(
        c=np.array([1.0, 0.0]),
        quad_constraints=(QuadConstraint(np.eye(2), np.zeros(2), -1.0),),
        a_ub=np.array([[1.0, 1.0]]),
        b_ub=np.array([1.5]),
        lower=-np.ones(2),
        upper=np.ones(2),
    )
    interior = feasibility_check(program, np.array([0.1, 0.1]))
    assert interior.max_violation < 0
    on_face = feasibility_check(program, np.array([0.75, 0.75]))
    assert on_face.lin[0] == pytest.approx(0.0, abs=1e-12)
    violating = feasibility_check(program, np.array([0.9, 0.9]))
    assert violating.max_violation > 0
    assert violating.worst == ("quad", 0)


def test_violation_reports_row_index():
    program = ConvexProgram(
        c=np.array([1.0, 1.0]),
        a_ub=np.array([[1.0, 0.0], [0.0, 1.0]]),
        b_ub=np.array([0.5, 0.2]),
        lower=-np.ones(2),
        upper=np.ones(2),
    )
    report = feasibility_check(program, np.array([0.0, 0.4]))
    assert report.worst == ("lin", 1)


def test_strictly_feasible_point_from_boundary():
    program = box_program(np.array([1.0, 1.0]))
    point = strictly_feasible_point(program, np.array([1.0, -1.0]))
    assert point is not None
    assert feasibility_check(program, point).max_violation < -1e-9


def test_strictly_feasible_point_none_for_empty_interior():
    # contradictory rows: x0 <= -1 and x0 >= 1
    program = ConvexProgram(
        c=np.array([1.0, 0.0]),
        a_ub=np.array([[1.0, 0.0], [-1.0, 0.0]]),
        b_ub=np.array([-1.0, -1.0]),
        lower=-2 * np.ones(2),
        upper=2 * np.ones(2),
    )
    assert strictly_feasible_point(program, np.zeros(2)) is None


def test_quad_constraint_rejects_non_psd():
    with pytest.raises(ValueError):
        QuadConstraint(np.array([[1.0, 0.0], [0.0, -1.0]]), np.zeros(2), -1.0)


def test_bounds_must_be_finite():
    with pytest.raises(ValueError):
        ConvexProgram(c=np.ones(2), lower=np.array([-np.inf, -1.0]), upper=np.ones(2))
