import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from otda.exceptions import DimensionError, ValidationError
from otda.measures import CostMatrix, DiscreteMeasure, TransportPlan
from otda.solvers import assignment_ot, exact_ot, transport_cost


def _uniform(n):
    return DiscreteMeasure.uniform(np.zeros((n, 1)))


def test_identical_points_cost_nothing():
    points = [[0.0, 0.0], [1.0, 2.0]]
    a = DiscreteMeasure.uniform(points)
    plan = exact_ot(a, a, CostMatrix.sqeuclidean(points, points))
    assert plan.objective_value == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(plan.coupling, np.diag([0.5, 0.5]), atol=1e-12)


def test_zero_diagonal_forces_identity():
    a = _uniform(2)
    plan = exact_ot(a, a, CostMatrix([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_allclose(plan.coupling, np.diag([0.5, 0.5]), atol=1e-12)
    assert plan.objective_value == pytest.approx(0.0, abs=1e-12)
    assert plan.converged


def test_matches_hungarian_on_random_assignments():
    """Uniform equal-size problems are assignment problems scaled by 1/n."""
    rng = np.random.default_rng(6)
    for n in (2, 3, 4, 5, 6, 7, 8):
        for _ in range(4):
            C = rng.uniform(size=(n, n))
            plan = exact_ot(_uniform(n), _uniform(n), CostMatrix(C))
            rows, cols = linear_sum_assignment(C)
            assert plan.objective_value == pytest.approx(C[rows, cols].sum() / n, abs=1e-9)
            assert plan.marginal_violation < 1e-9


def test_general_marginals():
    """Unequal supports and weights: feasibility and optimality against feasible plans."""
    rng = np.random.default_rng(3)
    for _ in range(10):
        n, m = rng.integers(2, 7, size=2)
        a = DiscreteMeasure(rng.normal(size=(n, 2)), rng.dirichlet(np.ones(n)))
        b = DiscreteMeasure(rng.normal(size=(m, 2)), rng.dirichlet(np.ones(m)))
        cost = CostMatrix.sqeuclidean(a.points, b.points)
        plan = exact_ot(a, b, cost)
        np.testing.assert_allclose(plan.coupling.sum(axis=1), a.weights, atol=1e-9)
        np.testing.assert_allclose(plan.coupling.sum(axis=0), b.weights, atol=1e-9)
        independent = TransportPlan(np.outer(a.weights, b.weights))
        assert plan.objective_value <= transport_cost(independent, cost) + 1e-12
        assert plan.objective_value == pytest.approx(transport_cost(plan, cost))


def test_vertex_solution_is_sparse():
    rng = np.random.default_rng(4)
    a = DiscreteMeasure(rng.normal(size=(5, 2)), rng.dirichlet(np.ones(5)))
    b = DiscreteMeasure(rng.normal(size=(6, 2)), rng.dirichlet(np.ones(6)))
    plan = exact_ot(a, b, CostMatrix.sqeuclidean(a.points, b.points))
    assert np.count_nonzero(plan.coupling > 1e-12) <= 5 + 6 - 1


def test_degenerate_problem_terminates():
    """Constant cost makes every feasible basis optimal."""
    plan = exact_ot(_uniform(6), _uniform(6), CostMatrix(np.ones((6, 6))))
    assert plan.objective_value == pytest.approx(1.0)


def test_exact_is_deterministic():
    rng = np.random.default_rng(8)
    C = CostMatrix(rng.uniform(size=(7, 7)))
    first = exact_ot(_uniform(7), _uniform(7), C)
    second = exact_ot(_uniform(7), _uniform(7), C)
    np.testing.assert_array_equal(first.coupling, second.coupling)


def test_exact_errors():
    with pytest.raises(DimensionError):
        exact_ot(_uniform(2), _uniform(3), CostMatrix(np.zeros((2, 2))))
    with pytest.raises(ValidationError):
        exact_ot(DiscreteMeasure([[0.0], [1.0]], [0.5, 0.2]), _uniform(2), CostMatrix(np.zeros((2, 2))))
    with pytest.raises(ValidationError):
        exact_ot(_uniform(3), _uniform(3), CostMatrix(np.zeros((3, 3))), max_support=2)


def test_assignment_ot():
    C = CostMatrix([[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]])
    plan = assignment_ot(C)
    assert plan.objective_value == pytest.approx(5.0 / 3)
    np.testing.assert_allclose(plan.coupling.sum(axis=0), 1 / 3)
    exact = exact_ot(_uniform(3), _uniform(3), C)
    assert exact.objective_value == pytest.approx(plan.objective_value)
    with pytest.raises(ValidationError):
        assignment_ot(CostMatrix(np.zeros((2, 3))))
