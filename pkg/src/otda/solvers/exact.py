#
# Exact optimal transport by the transportation simplex
#
from collections import deque
from dataclasses import replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from otda.exceptions import SolverError, ValidationError
from otda.logger import logger
from otda.measures import TransportPlan
from otda.solvers.utils import check_probability, marginal_violation, transport_cost

MAX_EXACT_SUPPORT = 256


def exact_ot(a, b, cost, max_support=MAX_EXACT_SUPPORT):
    """Solve the Kantorovich problem between two discrete probability measures.

    Uses the transportation simplex: a north-west corner basis, dual potentials
    on the spanning tree of basic cells, Dantzig pricing, and Bland's rule once
    a run of degenerate pivots is detected.

    Parameters
    ----------
    a, b : :class:`otda.measures.DiscreteMeasure`
        Source and target probability measures.
    cost : :class:`otda.measures.CostMatrix`
        Ground cost of shape ``(len(a), len(b))``.
    max_support : int, optional
        Largest support size accepted on either side.

    Returns
    -------
    :class:`otda.measures.TransportPlan`
        An optimal vertex of the transport polytope.
    """
    cost.check_supports(a, b)
    check_probability(a, "source measure")
    check_probability(b, "target measure")
    if max(len(a), len(b)) > max_support:
        msg = f"support size {max(len(a), len(b))} above the exact solver limit {max_support}"
        raise ValidationError(msg)

    flow, pivots = _transportation_simplex(a.weights, b.weights, cost.values)
    coupling = np.maximum(flow, 0.0)
    plan = TransportPlan(
        coupling,
        iterations=pivots,
        converged=True,
        marginal_violation=marginal_violation(coupling, a.weights, b.weights),
        solver="exact",
    )
    objective = transport_cost(plan, cost)
    logger.debug(f"exact_ot: {pivots} pivots, objective {objective:.6g}")
    return replace(plan, objective_value=objective, regularized_objective=objective)


def assignment_ot(cost):
    """Exact transport between two uniform measures of equal size.

    The optimal plan of the uniform problem is a permutation matrix scaled by
    ``1/n``, so the Hungarian method solves it exactly at sizes where the
    simplex would be slow.
    """
    n, m = cost.shape
    if n != m:
        msg = f"assignment needs a square cost, got {cost.shape}"
        raise ValidationError(msg)
    rows, cols = linear_sum_assignment(cost.values)
    coupling = np.zeros((n, n))
    coupling[rows, cols] = 1.0 / n
    objective = float(cost.values[rows, cols].sum() / n)
    return TransportPlan(
        coupling,
        objective_value=objective,
        iterations=0,
        converged=True,
        marginal_violation=0.0,
        regularized_objective=objective,
        solver="assignment",
    )


def _north_west_corner(supply, demand):
    n, m = supply.shape[0], demand.shape[0]
    supply = supply.copy()
    demand = demand.copy()
    flow = np.zeros((n, m))
    basis = set()
    i = j = 0
    while True:
        amount = min(supply[i], demand[j])
        flow[i, j] = amount
        basis.add((i, j))
        supply[i] -= amount
        demand[j] -= amount
        if i == n - 1 and j == m - 1:
            break
        # exactly one index moves per cell, so the basis ends with n + m - 1 cells
        if (supply[i] <= demand[j] and i < n - 1) or j == m - 1:
            i += 1
        else:
            j += 1
    return flow, basis


def _tree_adjacency(basis, n, m):
    adjacency = [[] for _ in range(n + m)]
    for i, j in basis:
        adjacency[i].append(n + j)
        adjacency[n + j].append(i)
    return adjacency


def _potentials(adjacency, cost, n):
    """Duals with ``u_i + v_j = C_ij`` on every basic cell, ``u_0 = 0``."""
    potential = np.full(len(adjacency), np.nan)
    potential[0] = 0.0
    stack = [0]
    while stack:
        node = stack.pop()
        for other in adjacency[node]:
            if np.isnan(potential[other]):
                if node < n:
                    potential[other] = cost[node, other - n] - potential[node]
                else:
                    potential[other] = cost[other, node - n] - potential[node]
                stack.append(other)
    return potential[:n], potential[n:]


def _tree_path(adjacency, start, goal):
    parent = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for other in adjacency[node]:
            if other not in parent:
                parent[other] = node
                queue.append(other)
    path = [goal]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    return path[::-1]


def _transportation_simplex(supply, demand, cost):
    n, m = cost.shape
    flow, basis = _north_west_corner(supply, demand)
    scale = max(1.0, float(np.max(np.abs(cost))))
    tol = 1e-12 * scale
    max_pivots = 50 * n * m + 1000
    degenerate_run = 0
    use_bland = False

    for pivot in range(max_pivots):
        adjacency = _tree_adjacency(basis, n, m)
        u, v = _potentials(adjacency, cost, n)
        reduced = cost - u[:, None] - v[None, :]
        for i, j in basis:
            reduced[i, j] = 0.0

        if use_bland:
            candidates = np.flatnonzero(reduced < -tol)
            if candidates.size == 0:
                return flow, pivot
            entering = divmod(int(candidates[0]), m)
        else:
            flat = int(np.argmin(reduced))
            if reduced.flat[flat] >= -tol:
                return flow, pivot
            entering = divmod(flat, m)

        ie, je = entering
        path = _tree_path(adjacency, ie, n + je)
        cells = []
        for start, end in zip(path[:-1], path[1:]):
            cells.append((start, end - n) if start < n else (end, start - n))
        # along the path from row ie to column je, odd edges lose flow
        losing = cells[0::2]
        gaining = cells[1::2]

        amounts = [flow[cell] for cell in losing]
        theta = min(amounts)
        ties = [cell for cell, amount in zip(losing, amounts) if amount == theta]
        leaving = min(ties) if use_bland else ties[0]

        for cell in losing:
            flow[cell] -= theta
        for cell in gaining:
            flow[cell] += theta
        flow[entering] += theta
        flow[leaving] = 0.0
        basis.remove(leaving)
        basis.add(entering)

        if theta == 0.0:
            degenerate_run += 1
            if degenerate_run > n + m and not use_bland:
                logger.debug("exact_ot: degenerate pivots, switching to Bland's rule")
                use_bland = True
        else:
            degenerate_run = 0

    msg = f"transportation simplex did not terminate after {max_pivots} pivots"
    raise SolverError(msg)
