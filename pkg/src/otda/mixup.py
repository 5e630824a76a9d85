#
# MixUp neighbour distributions
#
from dataclasses import dataclass

import numpy as np

from otda.exceptions import DimensionError, ValidationError
from otda.logger import logger
from otda.measures import CostMatrix, DiscreteMeasure
from otda.solvers import assignment_ot, exact_ot

# largest mixture support accepted by mixture_bound_check
MAX_MIXTURE_SUPPORT = 4096
METRICS = ("euclidean", "sqeuclidean")


@dataclass(frozen=True)
class MixupConfig:
    """MixUp settings.

    Parameters
    ----------
    alpha : float
        Parameter of the symmetric ``Beta(alpha, alpha)`` law of lambda.
    per_batch_lambda : bool
        Draw one lambda per minibatch. Per-sample lambdas are not supported.
    seed : int
        Seed of the lambda stream when no generator is passed.
    shared_lambda : bool
        Mix source and target batches with the same lambda.
    """

    alpha: float = 0.2
    per_batch_lambda: bool = True
    seed: int = 0
    shared_lambda: bool = True

    def __post_init__(self):
        if not self.alpha > 0:
            msg = "alpha must be positive"
            raise ValidationError(msg)
        if not self.per_batch_lambda:
            msg = "only one lambda per minibatch is supported"
            raise ValidationError(msg)


def sample_lambda(cfg, rng):
    """Draw ``lambda ~ Beta(alpha, alpha)`` from the generator ``rng``."""
    return float(rng.beta(cfg.alpha, cfg.alpha))


def _check_mixing(n, lam, perm):
    if not 0.0 <= lam <= 1.0:
        msg = f"lambda must lie in [0, 1], got {lam!r}"
        raise ValidationError(msg)
    perm = np.asarray(perm, dtype=int)
    if perm.shape != (n,) or not np.array_equal(np.sort(perm), np.arange(n)):
        msg = f"perm is not a permutation of {n} indices"
        raise ValidationError(msg)
    return perm


def mix_source_batch(batch, lam, perm):
    """Interpolate a labeled batch with a permuted copy of itself.

    Parameters
    ----------
    batch : tuple of array-like
        ``(X, Y)`` with inputs of shape (m, d) and label vectors of shape (m, K).
    lam : float
        Mixing weight in [0, 1].
    perm : array-like of int
        Partner index of every sample.

    Returns
    -------
    tuple of numpy.ndarray
        ``lam * X + (1 - lam) * X[perm]`` and the same mix of ``Y``.
    """
    X, Y = (np.atleast_2d(np.asarray(arr, dtype=float)) for arr in batch)
    if X.shape[0] != Y.shape[0]:
        msg = f"{X.shape[0]} inputs but {Y.shape[0]} labels"
        raise DimensionError(msg)
    perm = _check_mixing(X.shape[0], lam, perm)
    return lam * X + (1 - lam) * X[perm], lam * Y + (1 - lam) * Y[perm]


def mix_target_batch(X, lam, perm):
    """Interpolate an unlabeled batch with a permuted copy of itself.

    Pseudo-labels of the mixed inputs are the network predictions on them,
    computed by the caller.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    perm = _check_mixing(X.shape[0], lam, perm)
    return lam * X + (1 - lam) * X[perm]


def neighbour_measure(measure, lambdas):
    """Finite MixUp neighbour distribution of ``measure`` over a set of lambdas.

    Every lambda contributes all pairwise interpolations
    ``lam * x_i + (1 - lam) * x_j`` with weight ``w_i * w_j / len(lambdas)``.
    """
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=float))
    X, w = measure.points, measure.weights
    points = [lam * X[:, None, :] + (1 - lam) * X[None, :, :] for lam in lambdas]
    points = np.concatenate([p.reshape(-1, X.shape[1]) for p in points])
    weights = np.tile(np.outer(w, w).ravel(), len(lambdas)) / len(lambdas)
    return DiscreteMeasure(points, weights)


@dataclass(frozen=True)
class MixtureBoundResult:
    """Both sides of the MixUp upper bound on the Wasserstein distance.

    ``lhs`` is the distance between the source neighbour mixture over the
    lambda draws and the target neighbour mixture over an independent set of
    draws; ``rhs`` is the mean distance over the paired draws and ``stderr``
    its Monte-Carlo standard error. The ``*_shared`` fields repeat the
    computation with the source lambdas on both sides.
    """

    lhs: float
    rhs: float
    stderr: float
    lhs_shared: float
    rhs_shared: float
    metric: str
    num_draws: int

    @property
    def holds(self):
        return self.lhs <= self.rhs + 2 * self.stderr


def _wasserstein(a, b, metric):
    if metric == "euclidean":
        cost = CostMatrix.euclidean(a.points, b.points)
    else:
        cost = CostMatrix.sqeuclidean(a.points, b.points)
    uniform = len(a) == len(b) and np.ptp(a.weights) == 0 and np.ptp(b.weights) == 0
    if uniform:
        return assignment_ot(cost).objective_value
    return exact_ot(a, b, cost, max_support=MAX_MIXTURE_SUPPORT).objective_value


def mixture_bound_check(mu, nu, cfg, num_lambda_draws, metric="euclidean", rng=None):
    """Monte-Carlo check of ``W(mu~, nu~) <= E_{lambda, lambda'} W(mu~_lambda, nu~_lambda')``.

    Parameters
    ----------
    mu, nu : :class:`otda.measures.DiscreteMeasure`
        Probability measures on a common feature space.
    cfg : :class:`MixupConfig`
        ``alpha`` of the lambda law, ``seed`` when ``rng`` is omitted.
    num_lambda_draws : int
        Number of lambda pairs.
    metric : {"euclidean", "sqeuclidean"}
        Ground cost of the distance (W1 or squared W2).
    rng : numpy.random.Generator, optional

    Returns
    -------
    :class:`MixtureBoundResult`
    """
    if metric not in METRICS:
        msg = f"unknown metric {metric!r}, expected one of {METRICS}"
        raise ValidationError(msg)
    if num_lambda_draws < 1:
        msg = "num_lambda_draws must be at least 1"
        raise ValidationError(msg)
    size = num_lambda_draws * max(len(mu), len(nu)) ** 2
    if size > MAX_MIXTURE_SUPPORT:
        msg = f"mixture support {size} above the limit {MAX_MIXTURE_SUPPORT}"
        raise ValidationError(msg)
    rng = np.random.default_rng(cfg.seed) if rng is None else rng

    lambdas = np.array([sample_lambda(cfg, rng) for _ in range(num_lambda_draws)])
    lambdas_prime = np.array([sample_lambda(cfg, rng) for _ in range(num_lambda_draws)])

    terms = np.array(
        [
            _wasserstein(neighbour_measure(mu, [lam]), neighbour_measure(nu, [lam_p]), metric)
            for lam, lam_p in zip(lambdas, lambdas_prime)
        ]
    )
    shared_terms = np.array(
        [
            _wasserstein(neighbour_measure(mu, [lam]), neighbour_measure(nu, [lam]), metric)
            for lam in lambdas
        ]
    )
    lhs = _wasserstein(neighbour_measure(mu, lambdas), neighbour_measure(nu, lambdas_prime), metric)
    lhs_shared = _wasserstein(neighbour_measure(mu, lambdas), neighbour_measure(nu, lambdas), metric)
    stderr = float(terms.std(ddof=1) / np.sqrt(len(terms))) if len(terms) > 1 else 0.0
    result = MixtureBoundResult(
        lhs=lhs,
        rhs=float(terms.mean()),
        stderr=stderr,
        lhs_shared=lhs_shared,
        rhs_shared=float(shared_terms.mean()),
        metric=metric,
        num_draws=num_lambda_draws,
    )
    logger.debug(f"mixture_bound_check: lhs {result.lhs:.6g}, rhs {result.rhs:.6g} +- {stderr:.2g}")
    return result
