#
# Entropic optimal transport: balanced and unbalanced Sinkhorn
#
import numpy as np
from scipy.special import logsumexp

from otda.exceptions import SolverError, ValidationError
from otda.logger import logger
from otda.measures import TransportPlan
from otda.solvers.utils import (
    check_probability,
    generalized_kl,
    marginal_violation,
    round_to_marginals,
    transport_cost,
)

# each epsilon-scaling stage divides epsilon by this factor
SCALING_FACTOR = 4.0
# scalings are absorbed into the potentials once |log u| or |log v| exceeds this
ABSORB_THRESHOLD = 10.0
# the balanced marginal violation is evaluated every CHECK_EVERY iterations
CHECK_EVERY = 10


def sinkhorn(a, b, cost, cfg):
    """Entropic optimal transport between two probability measures.

    Minimizes ``<pi, C> + epsilon * KL(pi | a x b)`` under both marginal
    constraints. The plan is ``pi_ij = a_i b_j exp((f_i + g_j - C_ij) /
    epsilon)``. With ``cfg.log_domain`` the potentials ``f, g`` are kept
    explicitly and the multiplicative scalings are absorbed into them
    whenever they grow, which stays finite for any epsilon; otherwise the
    plain kernel ``exp(-C / epsilon)`` is scaled, which fails with a
    :class:`~otda.exceptions.SolverError` once the kernel underflows.

    Iterations stop when the L1 error of the column marginal drops below
    ``cfg.tolerance`` (rows are exact after each sweep). The final plan is
    then rounded onto the transport polytope, so both marginals hold to
    floating point even when the iteration cap is reached first.

    Parameters
    ----------
    a, b : :class:`otda.measures.DiscreteMeasure`
        Probability measures.
    cost : :class:`otda.measures.CostMatrix`
        Ground cost of shape ``(len(a), len(b))``.
    cfg : :class:`otda.measures.SolverConfig`
        ``epsilon`` (> 0), ``max_iterations``, ``tolerance``, ``log_domain``
        and optionally ``scale_epsilon`` and ``epsilon_scaling``.

    Returns
    -------
    :class:`otda.measures.TransportPlan`
    """
    cost.check_supports(a, b)
    check_probability(a, "source measure")
    check_probability(b, "target measure")
    epsilon = cfg.effective_epsilon(cost)
    if not epsilon > 0:
        msg = "sinkhorn needs a positive epsilon"
        raise ValidationError(msg)

    log_a, log_b = _log_weights(a.weights), _log_weights(b.weights)
    C = cost.values
    f = np.zeros(len(a))
    g = np.zeros(len(b))
    iterations = 0
    if cfg.epsilon_scaling:
        for stage_epsilon in _epsilon_schedule(epsilon, C):
            f, g, stage_iterations, _ = _scaling_iterations(
                log_a, log_b, a.weights, b.weights, C, stage_epsilon, f, g,
                cfg.max_iterations, max(cfg.tolerance, 1e-4), stabilized=cfg.log_domain,
            )
            iterations += stage_iterations
    f, g, final_iterations, residual = _scaling_iterations(
        log_a, log_b, a.weights, b.weights, C, epsilon, f, g,
        cfg.max_iterations, cfg.tolerance, stabilized=cfg.log_domain,
    )
    iterations += final_iterations

    coupling = _coupling(log_a, log_b, f, g, C, epsilon)
    converged = residual < cfg.tolerance
    if not converged:
        logger.warning(
            f"sinkhorn stopped after {iterations} iterations with marginal "
            f"violation {residual:.3e} (tolerance {cfg.tolerance:.1e}); "
            "plan rounded onto the marginals"
        )
    coupling = round_to_marginals(coupling, a.weights, b.weights)
    violation = marginal_violation(coupling, a.weights, b.weights)
    plan = TransportPlan(
        coupling,
        iterations=iterations,
        converged=converged,
        marginal_violation=violation,
        solver="sinkhorn",
    )
    objective = transport_cost(plan, cost)
    regularized = objective + epsilon * generalized_kl(
        coupling.ravel(), np.outer(a.weights, b.weights).ravel()
    )
    logger.debug(
        f"sinkhorn: {iterations} iterations, residual {residual:.3e}, "
        f"violation after rounding {violation:.3e}"
    )
    return TransportPlan(
        coupling,
        objective_value=objective,
        iterations=iterations,
        converged=converged,
        marginal_violation=violation,
        regularized_objective=regularized,
        solver="sinkhorn",
    )


def unbalanced_sinkhorn(a, b, cost, cfg):
    """Entropic unbalanced optimal transport.

    Minimizes::

        <pi, C> + epsilon * KL(pi | a x b)
                + tau * (KL(pi 1 | a) + KL(pi^T 1 | b))

    with generalized KL divergences, so the plan may carry less mass than
    the inputs. The fixed point damps each scaling update by the exponent
    ``tau / (tau + epsilon)``. Iterations stop when the largest change of the
    log-scalings ``f / epsilon`` and ``g / epsilon`` drops below
    ``cfg.tolerance``. ``cfg.log_domain`` selects between absorbed potentials
    and plain kernel scaling as in :func:`sinkhorn`.

    Raises
    ------
    :class:`otda.exceptions.SolverError`
        If a scaling or dual potential becomes non-finite.
    """
    cost.check_supports(a, b)
    if not cfg.tau > 0:
        msg = "unbalanced sinkhorn needs a positive tau"
        raise ValidationError(msg)
    epsilon = cfg.effective_epsilon(cost)
    if not epsilon > 0:
        msg = "unbalanced sinkhorn needs a positive epsilon"
        raise ValidationError(msg)

    tau = cfg.tau
    log_a, log_b = _log_weights(a.weights), _log_weights(b.weights)
    C = cost.values
    f, g, iterations, change = _scaling_iterations(
        log_a, log_b, a.weights, b.weights, C, epsilon,
        np.zeros(len(a)), np.zeros(len(b)), cfg.max_iterations, cfg.tolerance,
        stabilized=cfg.log_domain, exponent=tau / (tau + epsilon),
    )
    converged = change < cfg.tolerance
    if not converged:
        logger.warning(
            f"unbalanced sinkhorn stopped after {iterations} iterations with "
            f"scaling change {change:.3e} (tolerance {cfg.tolerance:.1e})"
        )

    coupling = _coupling(log_a, log_b, f, g, C, epsilon)
    if not np.all(np.isfinite(coupling)):
        msg = "non-finite transport plan"
        raise SolverError(msg)
    plan = TransportPlan(
        coupling,
        iterations=iterations,
        converged=converged,
        marginal_violation=marginal_violation(coupling, a.weights, b.weights),
        solver="unbalanced",
    )
    objective = transport_cost(plan, cost)
    regularized = (
        objective
        + epsilon * generalized_kl(coupling.ravel(), np.outer(a.weights, b.weights).ravel())
        + tau * marginal_kl(plan, a, b)
    )
    logger.debug(f"unbalanced sinkhorn: {iterations} iterations, mass {coupling.sum():.6g}")
    return TransportPlan(
        coupling,
        objective_value=objective,
        iterations=iterations,
        converged=converged,
        marginal_violation=plan.marginal_violation,
        regularized_objective=regularized,
        solver="unbalanced",
    )


def marginal_kl(plan, a, b):
    """Marginal penalty ``KL(pi 1 | a) + KL(pi^T 1 | b)`` of an unbalanced plan."""
    return generalized_kl(plan.coupling.sum(axis=1), a.weights) + generalized_kl(
        plan.coupling.sum(axis=0), b.weights
    )


def _log_weights(weights):
    with np.errstate(divide="ignore"):
        return np.log(weights)


def _coupling(log_a, log_b, f, g, C, epsilon):
    return np.exp(log_a[:, None] + log_b[None, :] + (f[:, None] + g[None, :] - C) / epsilon)


def _epsilon_schedule(epsilon, C):
    stage = float(np.max(C))
    stages = []
    while stage > SCALING_FACTOR * epsilon:
        stages.append(stage)
        stage /= SCALING_FACTOR
    return stages


def _ratio(weights, sums):
    # zero-weight atoms keep a unit scaling, their rows or columns carry no mass
    out = np.ones_like(weights)
    support = weights > 0
    with np.errstate(divide="ignore"):
        out[support] = weights[support] / sums[support]
    return out


def _scaling_iterations(
    log_a, log_b, a, b, C, epsilon, f, g, max_iterations, tolerance,
    stabilized=True, exponent=1.0,
):
    """Alternate column and row scalings of the plan at potentials ``f, g``.

    ``exponent == 1`` gives the balanced update and the returned residual is
    the L1 column violation; otherwise the updates are damped and the residual
    is the largest change of the log-scalings. The plan is kept as
    ``diag(u) P diag(v)`` with ``P`` evaluated at the current potentials.
    """
    balanced = exponent == 1.0
    decay = (1.0 - exponent) / epsilon
    iterations = 0
    if stabilized:
        g = -exponent * epsilon * logsumexp(log_a[:, None] + (f[:, None] - C) / epsilon, axis=0)
        f = -exponent * epsilon * logsumexp(log_b[None, :] + (g[None, :] - C) / epsilon, axis=1)
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(g))):
            msg = "non-finite dual potentials at iteration 1"
            raise SolverError(msg)
        iterations = 1

    kernel = _coupling(log_a, log_b, f, g, C, epsilon)
    u = np.ones(len(a))
    v = np.ones(len(b))
    if balanced:
        residual = float(np.abs(kernel.sum(axis=0) - b).sum())
    else:
        residual = np.inf
    if residual < tolerance:
        return f, g, iterations, residual

    decay_f, decay_g = np.exp(-decay * f), np.exp(-decay * g)
    log_f, log_g = f / epsilon, g / epsilon
    while iterations < max_iterations:
        iterations += 1
        v = _ratio(b, kernel.T @ u) ** exponent * decay_g
        u = _ratio(a, kernel @ v) ** exponent * decay_f
        with np.errstate(divide="ignore", invalid="ignore"):
            log_u, log_v = np.log(u), np.log(v)
        if not (np.all(np.isfinite(log_u)) and np.all(np.isfinite(log_v))):
            msg = f"non-finite scalings at iteration {iterations}"
            if not stabilized:
                msg += "; the kernel underflows, enable log_domain"
            raise SolverError(msg)
        if balanced:
            if iterations % CHECK_EVERY == 0 or iterations == max_iterations:
                residual = float(np.abs(v * (kernel.T @ u) - b).sum())
        else:
            new_f, new_g = f / epsilon + log_u, g / epsilon + log_v
            residual = max(np.max(np.abs(new_f - log_f)), np.max(np.abs(new_g - log_g)))
            log_f, log_g = new_f, new_g
        if residual < tolerance:
            break
        if stabilized and max(np.max(np.abs(log_u)), np.max(np.abs(log_v))) > ABSORB_THRESHOLD:
            f, g = f + epsilon * log_u, g + epsilon * log_v
            kernel = _coupling(log_a, log_b, f, g, C, epsilon)
            decay_f, decay_g = np.exp(-decay * f), np.exp(-decay * g)
            u, v = np.ones(len(a)), np.ones(len(b))

    return f + epsilon * np.log(u), g + epsilon * np.log(v), iterations, float(residual)
