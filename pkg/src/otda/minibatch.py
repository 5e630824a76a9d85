#
# Minibatch transport: transfer estimates, aggregated plans and plan diagnostics
#
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from otda.data import stratified_indices
from otda.exceptions import DimensionError, SolverError, ValidationError
from otda.logger import logger
from otda.measures import CostMatrix, DiscreteMeasure, TransportPlan
from otda.solvers import solve, transport_cost

# plan entries above this count as connections
CONNECTION_THRESHOLD = 1e-8
SOLVER_ALIASES = {"balanced": "exact"}


@dataclass(frozen=True)
class MinibatchSpec:
    """How minibatches are drawn.

    Parameters
    ----------
    m : int
        Batch size on both sides.
    k : int
        Number of independent draws.
    seed : int
        Root seed; draw ``d`` uses the stream ``SeedSequence([seed, d])``.
    stratified_source : bool
        Draw ``m // K`` source points per class.
    draw_seeds : tuple of int, optional
        Explicit seed of every draw, overriding the derived streams.
    """

    m: int
    k: int = 1
    seed: int = 0
    stratified_source: bool = False
    draw_seeds: tuple | None = None

    def __post_init__(self):
        if self.m < 1 or self.k < 1:
            msg = "m and k must be at least 1"
            raise ValidationError(msg)
        if self.draw_seeds is not None and len(self.draw_seeds) != self.k:
            msg = f"draw_seeds must list {self.k} seeds"
            raise ValidationError(msg)

    def rng(self, draw):
        if self.draw_seeds is not None:
            return np.random.default_rng(self.draw_seeds[draw])
        return np.random.default_rng(np.random.SeedSequence([self.seed, draw]))


@dataclass(frozen=True)
class PlanDiagnostics:
    """Mass statistics of a transport plan.

    ``class_shift_floor`` is the smallest cross-class fraction any plan with
    the same marginals can have, ``1 - sum_k min(r_k, c_k) / total`` with
    ``r_k, c_k`` the row and column mass of class ``k``. It is zero without
    label shift.
    """

    total_mass: float
    cross_class_mass_fraction: float
    num_connections: int
    raw_mass: float
    class_shift_floor: float = 0.0

    def __post_init__(self):
        if self.total_mass < 0:
            msg = "total_mass must be nonnegative"
            raise ValidationError(msg)
        if not 0.0 <= self.cross_class_mass_fraction <= 1.0:
            msg = "cross_class_mass_fraction must lie in [0, 1]"
            raise ValidationError(msg)

    @property
    def excess_cross_class(self):
        """Cross-class fraction above the label-shift floor."""
        return self.cross_class_mass_fraction - self.class_shift_floor

    def as_row(self, **keys):
        return {
            **keys,
            "total_mass": self.total_mass,
            "cross_class_fraction": self.cross_class_mass_fraction,
            "num_connections": self.num_connections,
            "raw_mass": self.raw_mass,
            "class_shift_floor": self.class_shift_floor,
        }


def _solver_kind(solver):
    kind = SOLVER_ALIASES.get(solver, solver)
    if kind not in ("exact", "sinkhorn", "unbalanced"):
        msg = f"unknown solver {solver!r}"
        raise ValidationError(msg)
    return kind


def draw_indices(src, tgt, spec, draw):
    """Sorted source and target indices of minibatch ``draw``."""
    if spec.m > min(len(src), len(tgt)):
        msg = f"batch size {spec.m} exceeds a support of size {min(len(src), len(tgt))}"
        raise ValidationError(msg)
    rng = spec.rng(draw)
    if spec.stratified_source:
        if src.labels is None:
            msg = "stratified draws need source labels"
            raise ValidationError(msg)
        class_count = int(src.labels.max()) + 1
        rows = stratified_indices(src.labels, class_count, spec.m, rng)
    else:
        rows = np.sort(rng.choice(len(src), spec.m, replace=False))
    cols = np.sort(rng.choice(len(tgt), spec.m, replace=False))
    return rows, cols


def _solve_draw(src, tgt, rows, cols, cost, kind, cfg, draw):
    a = DiscreteMeasure.uniform(src.points[rows])
    b = DiscreteMeasure.uniform(tgt.points[cols])
    try:
        return solve(a, b, cost, cfg, kind=kind)
    except SolverError as error:
        raise SolverError(str(error), draw=draw) from error


def minibatch_transfer_draws(src, tgt, cost_builder, solver, cfg, spec):
    """Transport objective of every minibatch draw.

    Parameters
    ----------
    src, tgt : :class:`otda.measures.DiscreteMeasure`
    cost_builder : callable
        ``cost_builder(rows, cols)`` returns the :class:`CostMatrix` between
        the selected source and target points.
    solver : {"exact", "balanced", "sinkhorn", "unbalanced"}
    cfg : :class:`otda.measures.SolverConfig`
    spec : :class:`MinibatchSpec`

    Returns
    -------
    numpy.ndarray of shape (k,)
    """
    kind = _solver_kind(solver)
    values = np.empty(spec.k)
    for draw in range(spec.k):
        rows, cols = draw_indices(src, tgt, spec, draw)
        cost = cost_builder(rows, cols)
        if cost.shape != (len(rows), len(cols)):
            msg = f"cost builder returned shape {cost.shape} for a {spec.m}x{spec.m} batch"
            raise DimensionError(msg)
        values[draw] = _solve_draw(src, tgt, rows, cols, cost, kind, cfg, draw).objective_value
    return values


def minibatch_transfer_estimate(src, tgt, cost_builder, solver, cfg, spec):
    """Monte-Carlo mean of the minibatch transport objective over ``spec.k`` draws."""
    return float(minibatch_transfer_draws(src, tgt, cost_builder, solver, cfg, spec).mean())


def monte_carlo_stderr(values):
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0
    return float(values.std(ddof=1) / np.sqrt(values.size))


def sliced_cost_builder(full_cost):
    """Cost builder that slices a precomputed full cost matrix."""

    def build(rows, cols):
        return full_cost.submatrix(rows, cols)

    return build


def feature_cost_builder(src, tgt, metric="sqeuclidean"):
    """Cost builder on the points of two measures."""
    if metric == "euclidean":
        return sliced_cost_builder(CostMatrix.euclidean(src.points, tgt.points))
    return sliced_cost_builder(CostMatrix.sqeuclidean(src.points, tgt.points))


def aggregate_plan(src, tgt, full_cost, solver, cfg, spec):
    """Average of the minibatch plans, each embedded at its global indices.

    ``objective_value`` of the result is its transport cost under
    ``full_cost``; ``iterations`` sums the iterations of all draws.
    """
    full_cost.check_supports(src, tgt)
    kind = _solver_kind(solver)
    total = np.zeros(full_cost.shape)
    iterations = 0
    converged = True
    for draw in range(spec.k):
        rows, cols = draw_indices(src, tgt, spec, draw)
        plan = _solve_draw(src, tgt, rows, cols, full_cost.submatrix(rows, cols), kind, cfg, draw)
        total[np.ix_(rows, cols)] += plan.coupling
        iterations += plan.iterations
        converged = converged and plan.converged
    aggregated = TransportPlan(total / spec.k, iterations=iterations, converged=converged, solver=kind)
    logger.debug(f"aggregate_plan: {spec.k} draws of size {spec.m}, {kind}")
    return replace(aggregated, objective_value=transport_cost(aggregated, full_cost))


def cross_class_mass(plan, src_labels, tgt_labels, num_draws=1):
    """Share of plan mass between points of different classes.

    Parameters
    ----------
    plan : :class:`otda.measures.TransportPlan`
    src_labels, tgt_labels : array-like of int
    num_draws : int
        Number of minibatch plans averaged into ``plan``; ``raw_mass`` is the
        summed mass ``num_draws * total_mass``.

    Returns
    -------
    :class:`PlanDiagnostics`
    """
    if src_labels is None or tgt_labels is None:
        msg = "cross-class mass needs labels on both sides"
        raise ValidationError(msg)
    src_labels = np.asarray(src_labels, dtype=int)
    tgt_labels = np.asarray(tgt_labels, dtype=int)
    if plan.shape != (src_labels.shape[0], tgt_labels.shape[0]):
        msg = f"plan of shape {plan.shape} for {src_labels.shape[0]} and {tgt_labels.shape[0]} labels"
        raise DimensionError(msg)
    coupling = plan.coupling
    total = float(coupling.sum())
    num_connections = int(np.count_nonzero(coupling > CONNECTION_THRESHOLD))
    if total <= 0:
        return PlanDiagnostics(0.0, 0.0, num_connections, 0.0, 0.0)
    mismatched = src_labels[:, None] != tgt_labels[None, :]
    fraction = float(coupling[mismatched].sum()) / total
    K = int(max(src_labels.max(), tgt_labels.max())) + 1
    row_mass = np.bincount(src_labels, weights=coupling.sum(axis=1), minlength=K)
    col_mass = np.bincount(tgt_labels, weights=coupling.sum(axis=0), minlength=K)
    floor = max(1.0 - float(np.minimum(row_mass, col_mass).sum()) / total, 0.0)
    return PlanDiagnostics(
        total_mass=total,
        cross_class_mass_fraction=min(max(fraction, 0.0), 1.0),
        num_connections=num_connections,
        raw_mass=total * num_draws,
        class_shift_floor=floor,
    )
