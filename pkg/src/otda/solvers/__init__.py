from otda.exceptions import ValidationError
from otda.solvers.exact import MAX_EXACT_SUPPORT, assignment_ot, exact_ot
from otda.solvers.sinkhorn import marginal_kl, sinkhorn, unbalanced_sinkhorn
from otda.solvers.utils import (
    generalized_kl,
    marginal_violation,
    plan_mass,
    round_to_marginals,
    transport_cost,
)

SOLVER_KINDS = ("exact", "sinkhorn", "unbalanced")


def solve(a, b, cost, cfg, kind=None):
    """Run the solver named by ``kind`` (``cfg.kind`` when omitted)."""
    kind = cfg.kind if kind is None else kind
    if kind == "exact":
        return exact_ot(a, b, cost)
    if kind == "sinkhorn":
        return sinkhorn(a, b, cost, cfg)
    if kind == "unbalanced":
        return unbalanced_sinkhorn(a, b, cost, cfg)
    msg = f"unknown solver kind {kind!r}, expected one of {SOLVER_KINDS}"
    raise ValidationError(msg)


__all__ = [
    "MAX_EXACT_SUPPORT",
    "SOLVER_KINDS",
    "assignment_ot",
    "exact_ot",
    "generalized_kl",
    "marginal_kl",
    "marginal_violation",
    "plan_mass",
    "round_to_marginals",
    "sinkhorn",
    "solve",
    "transport_cost",
    "unbalanced_sinkhorn",
]
