#
# Helpers shared by the transport solvers
#
import numpy as np

from otda.exceptions import DimensionError, ValidationError
from otda.measures import PROBABILITY_TOL


def transport_cost(plan, cost):
    """Linear transport cost ``sum_ij coupling[i, j] * C[i, j]``."""
    if plan.shape != cost.shape:
        msg = f"plan of shape {plan.shape} does not match cost of shape {cost.shape}"
        raise DimensionError(msg)
    return float(np.sum(plan.coupling * cost.values))


def plan_mass(plan):
    """Total mass carried by a plan."""
    return float(plan.coupling.sum())


def generalized_kl(u, v):
    """Kullback-Leibler divergence between nonnegative vectors.

    Computes ``sum_i u_i log(u_i / v_i) - u_i + v_i`` with ``0 log 0 = 0``,
    which stays nonnegative for unnormalized inputs.

    Parameters
    ----------
    u, v : array-like
        Nonnegative vectors of equal length, ``v_i > 0`` wherever ``u_i > 0``.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    v = np.asarray(v, dtype=float).reshape(-1)
    if u.shape != v.shape:
        msg = f"vectors of lengths {u.shape[0]} and {v.shape[0]}"
        raise DimensionError(msg)
    if np.any(u < 0) or np.any(v < 0):
        msg = "generalized KL needs nonnegative vectors"
        raise ValidationError(msg)
    support = u > 0
    if np.any(v[support] == 0):
        msg = "u is not absolutely continuous with respect to v"
        raise ValidationError(msg)
    log_term = np.sum(u[support] * np.log(u[support] / v[support]))
    return float(max(log_term - u.sum() + v.sum(), 0.0))


def check_probability(measure, name):
    if not measure.is_probability(PROBABILITY_TOL * max(1, len(measure))):
        msg = f"{name} is not a probability measure (mass {measure.total_mass!r})"
        raise ValidationError(msg)


def marginal_violation(coupling, a, b):
    """L1 violation of both marginals."""
    return float(
        np.abs(coupling.sum(axis=1) - a).sum() + np.abs(coupling.sum(axis=0) - b).sum()
    )


def round_to_marginals(coupling, a, b):
    """Project a nearly feasible coupling onto the transport polytope of ``a, b``.

    Rows with too much mass are scaled down to ``a``, then columns to ``b``,
    and the missing mass is added back as a rank-one correction. The result
    is nonnegative and has both marginals exact up to floating point, and
    its L1 distance to ``coupling`` is of the order of the marginal
    violation of the input.

    Parameters
    ----------
    coupling : numpy.ndarray
        Nonnegative matrix of shape ``(len(a), len(b))``.
    a, b : numpy.ndarray
        Target marginals of equal total mass.
    """
    coupling = np.asarray(coupling, dtype=float)
    rows = coupling.sum(axis=1)
    row_scale = np.minimum(np.divide(a, rows, out=np.ones_like(a), where=rows > 0), 1.0)
    rounded = coupling * row_scale[:, None]
    columns = rounded.sum(axis=0)
    column_scale = np.minimum(
        np.divide(b, columns, out=np.ones_like(b), where=columns > 0), 1.0
    )
    rounded = rounded * column_scale[None, :]
    row_deficit = np.maximum(a - rounded.sum(axis=1), 0.0)
    column_deficit = np.maximum(b - rounded.sum(axis=0), 0.0)
    missing = row_deficit.sum()
    if missing > 0:
        rounded = rounded + np.outer(row_deficit, column_deficit) / missing
    return rounded
