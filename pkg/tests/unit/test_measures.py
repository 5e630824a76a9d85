import numpy as np
import pytest

from otda.exceptions import DimensionError, ValidationError
from otda.measures import CostMatrix, DiscreteMeasure, SolverConfig, TransportPlan


def test_uniform_measure():
    measure = DiscreteMeasure.uniform([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    assert len(measure) == 4
    assert measure.dim == 2
    np.testing.assert_allclose(measure.weights, 0.25)
    assert measure.is_probability()


def test_measure_rejects_negative_or_mismatched_weights():
    with pytest.raises(ValidationError):
        DiscreteMeasure([[0.0], [1.0]], [1.5, -0.5])
    with pytest.raises(DimensionError):
        DiscreteMeasure([[0.0], [1.0]], [1.0])
    with pytest.raises(DimensionError):
        DiscreteMeasure([[0.0], [1.0]], [0.5, 0.5], labels=[0])


def test_measure_label_vectors_must_sum_to_one():
    DiscreteMeasure([[0.0], [1.0]], [0.5, 0.5], one_hot=[[1.0, 0.0], [0.3, 0.7]])
    with pytest.raises(ValidationError):
        DiscreteMeasure([[0.0], [1.0]], [0.5, 0.5], one_hot=[[1.0, 0.0], [0.3, 0.6]])


def test_unnormalized_measure_is_not_a_probability():
    measure = DiscreteMeasure([[0.0], [1.0]], [0.5, 0.4])
    assert not measure.is_probability()
    assert measure.total_mass == pytest.approx(0.9)


def test_subset_reweights_uniformly():
    measure = DiscreteMeasure.uniform(np.arange(6.0).reshape(3, 2), labels=[0, 1, 2])
    subset = measure.subset([0, 2])
    np.testing.assert_array_equal(subset.labels, [0, 2])
    np.testing.assert_allclose(subset.weights, 0.5)
    raw = measure.subset([0, 2], reweight=False)
    np.testing.assert_allclose(raw.weights, 1 / 3)


def test_sqeuclidean_cost():
    cost = CostMatrix.sqeuclidean([[0.0, 0.0], [1.0, 1.0]], [[0.0, 0.0], [3.0, 1.0]])
    np.testing.assert_allclose(cost.values, [[0.0, 10.0], [2.0, 4.0]])
    assert cost.metric_tag == "sqeuclidean"
    np.testing.assert_allclose(CostMatrix.euclidean([[0.0, 0.0]], [[3.0, 4.0]]).values, [[5.0]])


def test_cost_rejects_non_finite_entries_and_mismatched_supports():
    with pytest.raises(ValidationError):
        CostMatrix([[0.0, np.inf]])
    with pytest.raises(DimensionError):
        CostMatrix.sqeuclidean([[0.0, 0.0]], [[0.0]])
    cost = CostMatrix(np.zeros((2, 3)))
    with pytest.raises(DimensionError):
        cost.check_supports(DiscreteMeasure.uniform(np.zeros((3, 1))), DiscreteMeasure.uniform(np.zeros((2, 1))))


def test_submatrix():
    cost = CostMatrix(np.arange(12.0).reshape(3, 4), "custom")
    np.testing.assert_array_equal(cost.submatrix([0, 2], [1, 3]).values, [[1.0, 3.0], [9.0, 11.0]])


def test_plan_rejects_negative_entries():
    with pytest.raises(ValidationError):
        TransportPlan([[0.5, -0.1]])
    assert TransportPlan.zeros(2, 3).shape == (2, 3)


def test_solver_config_validation():
    with pytest.raises(ValidationError):
        SolverConfig(max_iterations=0)
    with pytest.raises(ValidationError):
        SolverConfig(tolerance=0.0)
    with pytest.raises(ValidationError):
        SolverConfig(epsilon=-1.0)
    with pytest.raises(ValidationError):
        SolverConfig(kind="network")


def test_relative_epsilon():
    cost = CostMatrix([[0.0, 4.0], [2.0, 1.0]])
    assert SolverConfig(epsilon=0.1).effective_epsilon(cost) == pytest.approx(0.1)
    assert SolverConfig(epsilon=0.1, scale_epsilon=True).effective_epsilon(cost) == pytest.approx(0.4)
