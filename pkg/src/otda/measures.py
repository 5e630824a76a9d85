#
# Discrete measures, cost matrices, transport plans and solver settings
#
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from otda.exceptions import DimensionError, ValidationError

PROBABILITY_TOL = 1e-12
ONE_HOT_TOL = 1e-9


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted point cloud with optional labels.

    Parameters
    ----------
    points : array-like, shape (n, d)
        Support points.
    weights : array-like, shape (n,)
        Nonnegative weights. Probability measures sum to one.
    labels : array-like of int, shape (n,), optional
        Class index of every point.
    one_hot : array-like, shape (n, K), optional
        Probability vector of every point, e.g. one-hot or MixUp labels.
    """

    points: np.ndarray
    weights: np.ndarray
    labels: np.ndarray | None = None
    one_hot: np.ndarray | None = None

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)
        n = points.shape[0]
        if weights.shape[0] != n:
            msg = f"{n} points but {weights.shape[0]} weights"
            raise DimensionError(msg)
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            msg = "weights must be finite and nonnegative"
            raise ValidationError(msg)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=int).reshape(-1)
            if labels.shape[0] != n:
                msg = f"{n} points but {labels.shape[0]} labels"
                raise DimensionError(msg)
            object.__setattr__(self, "labels", labels)
        if self.one_hot is not None:
            one_hot = np.atleast_2d(np.asarray(self.one_hot, dtype=float))
            if one_hot.shape[0] != n:
                msg = f"{n} points but {one_hot.shape[0]} label vectors"
                raise DimensionError(msg)
            if np.any(np.abs(one_hot.sum(axis=1) - 1) > ONE_HOT_TOL):
                msg = "label vectors must sum to one"
                raise ValidationError(msg)
            object.__setattr__(self, "one_hot", one_hot)

    @classmethod
    def uniform(cls, points, labels=None, one_hot=None):
        """Probability measure with weight ``1/n`` on each point."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n = points.shape[0]
        return cls(points, np.full(n, 1.0 / n), labels=labels, one_hot=one_hot)

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def total_mass(self):
        return float(self.weights.sum())

    def is_probability(self, tol=PROBABILITY_TOL):
        return abs(self.total_mass - 1.0) <= tol

    def subset(self, indices, reweight=True):
        """Restrict the measure to ``indices``, uniformly reweighted by default."""
        indices = np.asarray(indices, dtype=int)
        labels = None if self.labels is None else self.labels[indices]
        one_hot = None if self.one_hot is None else self.one_hot[indices]
        if reweight:
            weights = np.full(indices.shape[0], 1.0 / indices.shape[0])
        else:
            weights = self.weights[indices]
        return DiscreteMeasure(self.points[indices], weights, labels, one_hot)


@dataclass(frozen=True)
class CostMatrix:
    """Pairwise ground cost between a source and a target support.

    Parameters
    ----------
    values : array-like, shape (n_source, n_target)
        Finite cost entries.
    metric_tag : str
        How the entries were built, e.g. ``"sqeuclidean"`` or ``"joint-sce"``.
    """

    values: np.ndarray
    metric_tag: str = "custom"

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if values.ndim != 2:
            msg = "cost must be a matrix"
            raise DimensionError(msg)
        if not np.all(np.isfinite(values)):
            msg = "cost entries must be finite"
            raise ValidationError(msg)
        object.__setattr__(self, "values", values)

    @property
    def shape(self):
        return self.values.shape

    def check_supports(self, a, b):
        if self.shape != (len(a), len(b)):
            msg = f"cost of shape {self.shape} does not match supports ({len(a)}, {len(b)})"
            raise DimensionError(msg)

    def submatrix(self, rows, cols):
        return CostMatrix(self.values[np.ix_(rows, cols)], self.metric_tag)

    @classmethod
    def sqeuclidean(cls, x, y):
        """Squared Euclidean distances between the rows of ``x`` and ``y``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_2d(np.asarray(y, dtype=float))
        if x.shape[1] != y.shape[1]:
            msg = f"point dimensions differ: {x.shape[1]} and {y.shape[1]}"
            raise DimensionError(msg)
        diff = x[:, None, :] - y[None, :, :]
        return cls(np.einsum("ijk,ijk->ij", diff, diff), "sqeuclidean")

    @classmethod
    def euclidean(cls, x, y):
        sq = cls.sqeuclidean(x, y).values
        return cls(np.sqrt(sq), "euclidean")


@dataclass(frozen=True)
class TransportPlan:
    """Coupling matrix returned by a solver, with solver metadata.

    ``objective_value`` is always the linear transport cost ``<coupling, C>``;
    entropic and marginal penalty terms are reported in
    ``regularized_objective``.
    """

    coupling: np.ndarray
    objective_value: float = 0.0
    iterations: int = 0
    converged: bool = True
    marginal_violation: float = 0.0
    regularized_objective: float | None = None
    solver: str = "none"

    def __post_init__(self):
        coupling = np.atleast_2d(np.asarray(self.coupling, dtype=float))
        if np.any(coupling < 0):
            msg = "coupling entries must be nonnegative"
            raise ValidationError(msg)
        object.__setattr__(self, "coupling", coupling)

    @property
    def shape(self):
        return self.coupling.shape

    @classmethod
    def zeros(cls, n_source, n_target):
        return cls(np.zeros((n_source, n_target)))


@dataclass(frozen=True)
class SolverConfig:
    """Settings shared by the entropic solvers.

    Parameters
    ----------
    epsilon : float
        Entropic regularization, absolute unless ``scale_epsilon``.
    tau : float
        Marginal relaxation of the unbalanced solver.
    max_iterations : int
        Iteration cap.
    tolerance : float
        Stopping threshold (L1 marginal violation for the balanced solver,
        L-infinity change of the log-scalings for the unbalanced one).
    log_domain : bool
        Keep explicit dual potentials and absorb the scalings into them
        (stable for any epsilon). When false the plain kernel
        ``exp(-C / epsilon)`` is scaled, which is faster but raises
        :class:`~otda.exceptions.SolverError` once the kernel underflows.
    scale_epsilon : bool
        Interpret ``epsilon`` relative to ``max(C)`` of each problem.
    epsilon_scaling : bool
        Warm start the balanced solver by a decreasing epsilon schedule.
    """

    epsilon: float = 0.1
    tau: float = 1.0
    max_iterations: int = 1000
    tolerance: float = 1e-7
    log_domain: bool = True
    scale_epsilon: bool = False
    epsilon_scaling: bool = False
    kind: str = field(default="exact")

    def __post_init__(self):
        if self.max_iterations < 1:
            msg = "max_iterations must be at least 1"
            raise ValidationError(msg)
        if not self.tolerance > 0:
            msg = "tolerance must be positive"
            raise ValidationError(msg)
        if self.epsilon < 0:
            msg = "epsilon must be nonnegative"
            raise ValidationError(msg)
        if self.kind not in ("exact", "sinkhorn", "unbalanced"):
            msg = f"unknown solver kind {self.kind!r}"
            raise ValidationError(msg)

    def effective_epsilon(self, cost):
        """Absolute epsilon for ``cost``."""
        scale = float(np.max(cost.values)) if cost.values.size else 0.0
        if self.scale_epsilon and scale > 0:
            return self.epsilon * scale
        return self.epsilon
