import numpy as np
import pytest

from otda.exceptions import DimensionError, ValidationError
from otda.measures import CostMatrix, TransportPlan
from otda.solvers import generalized_kl, plan_mass, transport_cost


def test_transport_cost():
    cost = CostMatrix([[0.0, 1.0], [1.0, 0.0]])
    assert transport_cost(TransportPlan.zeros(2, 2), cost) == 0.0
    assert transport_cost(TransportPlan(np.eye(2) / 2), cost) == 0.0
    assert transport_cost(TransportPlan(np.full((2, 2), 0.25)), cost) == pytest.approx(0.5)


def test_transport_cost_shape_mismatch():
    with pytest.raises(DimensionError):
        transport_cost(TransportPlan.zeros(2, 3), CostMatrix(np.zeros((2, 2))))


def test_generalized_kl_examples():
    assert generalized_kl([0.3, 0.7], [0.3, 0.7]) == pytest.approx(0.0, abs=1e-15)
    assert generalized_kl([0.0, 0.0], [0.3, 0.7]) == pytest.approx(1.0)
    assert generalized_kl([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.14384, abs=1e-5)


def test_generalized_kl_is_nonnegative_on_unnormalized_vectors():
    rng = np.random.default_rng(0)
    for _ in range(20):
        u = rng.uniform(0, 2, 5)
        v = rng.uniform(0.1, 2, 5)
        assert generalized_kl(u, v) >= 0.0


def test_generalized_kl_errors():
    with pytest.raises(ValidationError):
        generalized_kl([0.5, 0.5], [1.0, 0.0])
    with pytest.raises(DimensionError):
        generalized_kl([0.5, 0.5], [1.0])
    with pytest.raises(ValidationError):
        generalized_kl([-0.5, 0.5], [0.5, 0.5])


def test_plan_mass():
    assert plan_mass(TransportPlan.zeros(3, 3)) == 0.0
    assert plan_mass(TransportPlan(np.full((2, 2), 0.25))) == pytest.approx(1.0)
