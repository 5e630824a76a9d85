import numpy as np
import pytest

from otda.exceptions import DimensionError, ValidationError
from otda.measures import DiscreteMeasure
from otda.mixup import (
    MixupConfig,
    mix_source_batch,
    mix_target_batch,
    mixture_bound_check,
    neighbour_measure,
    sample_lambda,
)


def test_lambda_law():
    cfg = MixupConfig(alpha=0.2)
    rng = np.random.default_rng(0)
    draws = np.array([sample_lambda(cfg, rng) for _ in range(100_000)])
    assert abs(draws.mean() - 0.5) < 0.01
    tails = np.mean((draws <= 0.1) | (draws >= 0.9))
    assert tails >= 0.6


def test_lambda_is_reproducible():
    cfg = MixupConfig(alpha=0.2)
    first = [sample_lambda(cfg, np.random.default_rng(3)) for _ in range(3)]
    second = [sample_lambda(cfg, np.random.default_rng(3)) for _ in range(3)]
    assert first == second


def test_mixup_config_validation():
    with pytest.raises(ValidationError):
        MixupConfig(alpha=0.0)
    with pytest.raises(ValidationError):
        MixupConfig(per_batch_lambda=False)


def test_mix_source_batch():
    X = np.array([[0.0, 0.0], [2.0, 4.0]])
    Y = np.eye(2)
    X_mix, Y_mix = mix_source_batch((X, Y), 0.25, [1, 0])
    np.testing.assert_allclose(X_mix, [[1.5, 3.0], [0.5, 1.0]])
    np.testing.assert_allclose(Y_mix, [[0.25, 0.75], [0.75, 0.25]])
    np.testing.assert_allclose(Y_mix.sum(axis=1), 1.0)


def test_mixing_with_unit_lambda_or_identity_is_a_no_op():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(5, 3))
    np.testing.assert_allclose(mix_target_batch(X, 1.0, [4, 3, 2, 1, 0]), X)
    np.testing.assert_allclose(mix_target_batch(X, 0.3, np.arange(5)), X)


def test_mixing_errors():
    X = np.zeros((3, 2))
    with pytest.raises(ValidationError):
        mix_target_batch(X, 1.5, [0, 1, 2])
    with pytest.raises(ValidationError):
        mix_target_batch(X, 0.5, [0, 0, 1])
    with pytest.raises(DimensionError):
        mix_source_batch((X, np.eye(2)), 0.5, [0, 1, 2])


def test_neighbour_measure():
    mu = DiscreteMeasure.uniform([[0.0], [2.0]])
    mixture = neighbour_measure(mu, [0.5, 1.0])
    assert len(mixture) == 8
    assert mixture.is_probability()
    np.testing.assert_allclose(mixture.points[:4].ravel(), [0.0, 1.0, 1.0, 2.0])
    np.testing.assert_allclose(mixture.points[4:].ravel(), [0.0, 0.0, 2.0, 2.0])


def test_mixture_bound_holds_on_small_clouds():
    rng = np.random.default_rng(2)
    mu = DiscreteMeasure.uniform(rng.normal(size=(4, 2)))
    nu = DiscreteMeasure.uniform(rng.normal(size=(4, 2)) + 1.0)
    result = mixture_bound_check(mu, nu, MixupConfig(alpha=0.2, seed=5), 10)
    assert result.holds
    assert result.lhs_shared <= result.rhs_shared + 1e-9
    assert result.num_draws == 10
    assert result.metric == "euclidean"


def test_mixture_bound_errors():
    mu = DiscreteMeasure.uniform(np.zeros((4, 2)))
    with pytest.raises(ValidationError):
        mixture_bound_check(mu, mu, MixupConfig(), 0)
    with pytest.raises(ValidationError):
        mixture_bound_check(mu, mu, MixupConfig(), 3, metric="cosine")
    with pytest.raises(ValidationError):
        mixture_bound_check(mu, mu, MixupConfig(), 300)
