#
# Verification suites: solver oracles, MixUp bound, gradients and plan structure
#
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from otda.data import ScenarioConfig, gen_blobs_pair, gen_clusters_scenario
from otda.exceptions import CheckFailure, ValidationError
from otda.logger import logger
from otda.losses import LossWeights
from otda.measures import CostMatrix, DiscreteMeasure, SolverConfig, TransportPlan
from otda.minibatch import (
    MinibatchSpec,
    aggregate_plan,
    cross_class_mass,
    feature_cost_builder,
    minibatch_transfer_draws,
    monte_carlo_stderr,
)
from otda.mixup import MixupConfig, mix_source_batch, mixture_bound_check
from otda.model import composite_loss_and_grads, finite_difference_check, init_params
from otda.solvers import exact_ot, marginal_kl, marginal_violation, sinkhorn, unbalanced_sinkhorn

CHECK_KINDS = ("gradcheck", "mixture-bound", "solver-oracle", "entropic", "jensen", "clusters", "ablation")
# other names accepted by `otda check --kind`
CHECK_ALIASES = {"prop1": "mixture-bound"}

GRADCHECK_TOLERANCE = 1e-4
ORACLE_TOLERANCE = 1e-9
ENTROPIC_GAP = 0.01
ENTROPIC_VIOLATION = 1e-7
UNBALANCED_GAP = 0.02
CLOSED_FORM_TOLERANCE = 1e-6
MONOTONE_SLACK = 1e-6
ABLATION_MARGIN = 0.02
BASELINE_MARGIN = 0.05


@dataclass(frozen=True)
class Check:
    """One measured quantity against its threshold."""

    name: str
    value: float
    threshold: float
    passed: bool

    def as_dict(self):
        return {
            "name": self.name,
            "value": float(self.value),
            "threshold": float(self.threshold),
            "passed": bool(self.passed),
        }


def at_most(name, value, threshold):
    return Check(name, float(value), float(threshold), bool(value <= threshold))


def at_least(name, value, threshold):
    return Check(name, float(value), float(threshold), bool(value >= threshold))


def above(name, value, threshold):
    return Check(name, float(value), float(threshold), bool(value > threshold))


def below(name, value, threshold):
    return Check(name, float(value), float(threshold), bool(value < threshold))


@dataclass(frozen=True)
class CheckReport:
    kind: str
    checks: tuple

    @property
    def passed(self):
        return all(check.passed for check in self.checks)

    def failures(self):
        return [check for check in self.checks if not check.passed]

    def as_document(self):
        return {
            "kind": self.kind,
            "passed": self.passed,
            "checks": [check.as_dict() for check in self.checks],
        }

    def raise_for_failure(self):
        """Raise :class:`otda.exceptions.CheckFailure` naming the failed checks."""
        failed = self.failures()
        if failed:
            names = ", ".join(check.name for check in failed)
            msg = f"{self.kind}: {len(failed)} of {len(self.checks)} checks failed ({names})"
            raise CheckFailure(msg)


#
# Gradients
#


def gradcheck_instance(seed, label_loss="sce"):
    """Small seeded training problem: parameters and a loss-and-gradient callable.

    Two-dimensional inputs, a hidden layer of width 4, a 3-dimensional
    embedding, three classes, batches of four and a random plan of unit mass.
    """
    rng = np.random.default_rng(seed)
    params = init_params((2, 4, 3, 3), rng, activations=("tanh", "tanh"))
    m = 4
    Xs = rng.normal(size=(m, 2))
    Ys = np.eye(3)[rng.integers(0, 3, m)]
    src_mixed = mix_source_batch((Xs, Ys), 0.7, rng.permutation(m))
    Xt = rng.normal(size=(m, 2))
    coupling = rng.uniform(size=(m, m))
    plan = TransportPlan(coupling / coupling.sum())
    weights = LossWeights(eta1=0.5, eta2=0.5)

    def loss_and_grads(p):
        return composite_loss_and_grads(p, src_mixed, Xt, plan, (Xs, Ys), weights, 1.0, label_loss)

    return params, loss_and_grads


def gradcheck_suite(seeds=range(5), h=1e-5):
    checks = []
    for seed in seeds:
        for label_loss in ("ce", "sce"):
            params, loss_and_grads = gradcheck_instance(seed, label_loss)
            error = finite_difference_check(params, loss_and_grads, h)
            checks.append(at_most(f"seed {seed} {label_loss}", error, GRADCHECK_TOLERANCE))
    return CheckReport("gradcheck", tuple(checks))


#
# Exact and entropic solvers
#


def _random_points(rng, n, m, dim=2):
    return rng.uniform(size=(n, dim)), rng.uniform(size=(m, dim))


def solver_oracle_suite(num_instances=50, seed=0):
    """Transportation simplex against the Hungarian method on uniform assignments."""
    rng = np.random.default_rng(seed)
    gaps = []
    violations = []
    for _ in range(num_instances):
        n = int(rng.integers(2, 9))
        C = rng.uniform(size=(n, n))
        a = DiscreteMeasure.uniform(np.zeros((n, 1)))
        plan = exact_ot(a, a, CostMatrix(C))
        rows, cols = linear_sum_assignment(C)
        gaps.append(abs(plan.objective_value - C[rows, cols].sum() / n))
        violations.append(plan.marginal_violation)
    return CheckReport(
        "solver-oracle",
        (
            at_most("max objective gap", max(gaps), ORACLE_TOLERANCE),
            at_most("max marginal violation", max(violations), ORACLE_TOLERANCE),
        ),
    )


def entropic_suite(num_instances=20, seed=0):
    """Small-epsilon Sinkhorn against exact transport and the limits of the unbalanced solver."""
    rng = np.random.default_rng(seed)
    gaps, violations = [], []
    small = SolverConfig(
        epsilon=1e-3,
        scale_epsilon=True,
        epsilon_scaling=True,
        max_iterations=20000,
        tolerance=1e-9,
        kind="sinkhorn",
    )
    for _ in range(num_instances):
        x, y = _random_points(rng, 10, 10)
        a, b = DiscreteMeasure.uniform(x), DiscreteMeasure.uniform(y)
        cost = CostMatrix.sqeuclidean(x, y)
        exact = exact_ot(a, b, cost)
        plan = sinkhorn(a, b, cost, small)
        gaps.append(abs(plan.objective_value - exact.objective_value) / exact.objective_value)
        violations.append(marginal_violation(plan.coupling, a.weights, b.weights))

    def relaxed(tau):
        return SolverConfig(
            epsilon=0.1, tau=tau, max_iterations=5000, tolerance=1e-9, kind="unbalanced"
        )

    balanced_gaps, closed_form_errors, monotone_breaks = [], [], []
    for _ in range(num_instances):
        x, y = _random_points(rng, 8, 8)
        a, b = DiscreteMeasure.uniform(x), DiscreteMeasure.uniform(y)
        cost = CostMatrix.sqeuclidean(x, y)
        cfg = SolverConfig(epsilon=0.1, max_iterations=10000, tolerance=1e-9, kind="sinkhorn")
        balanced = sinkhorn(a, b, cost, cfg).objective_value
        loose = unbalanced_sinkhorn(a, b, cost, relaxed(100.0)).objective_value
        balanced_gaps.append(abs(loose - balanced) / balanced)
        frozen = unbalanced_sinkhorn(a, b, cost, relaxed(1e-9))
        closed_form = np.outer(a.weights, b.weights) * np.exp(-cost.values / 0.1)
        closed_form_errors.append(float(np.max(np.abs(frozen.coupling - closed_form))))
        penalties = [
            marginal_kl(unbalanced_sinkhorn(a, b, cost, relaxed(tau)), a, b)
            for tau in (0.01, 0.1, 1.0, 10.0)
        ]
        monotone_breaks.append(max(float(np.diff(penalties).max()), 0.0))

    return CheckReport(
        "entropic",
        (
            at_most("sinkhorn relative gap to exact", max(gaps), ENTROPIC_GAP),
            at_most("sinkhorn marginal violation", max(violations), ENTROPIC_VIOLATION),
            at_most("unbalanced tau=100 relative gap to sinkhorn", max(balanced_gaps), UNBALANCED_GAP),
            at_most("unbalanced tau=1e-9 closed form error", max(closed_form_errors), CLOSED_FORM_TOLERANCE),
            at_most("marginal penalty increase over tau", max(monotone_breaks), MONOTONE_SLACK),
        ),
    )


#
# Minibatch and MixUp bounds
#


def jensen_suite(num_instances=10, batch_sizes=(2, 4, 8), num_draws=500, seed=0):
    """Mean minibatch exact transport stays above the full transport cost."""
    checks = []
    for instance in range(num_instances):
        rng = np.random.default_rng([seed, instance])
        x, y = _random_points(rng, 16, 16)
        src, tgt = DiscreteMeasure.uniform(x), DiscreteMeasure.uniform(y + 0.5)
        builder = feature_cost_builder(src, tgt)
        full = exact_ot(src, tgt, CostMatrix.sqeuclidean(src.points, tgt.points)).objective_value
        for m in batch_sizes:
            spec = MinibatchSpec(m=m, k=num_draws, seed=instance)
            values = minibatch_transfer_draws(src, tgt, builder, "exact", SolverConfig(), spec)
            checks.append(
                at_least(
                    f"instance {instance} m={m}",
                    values.mean() - full,
                    -2 * monte_carlo_stderr(values),
                )
            )
    return CheckReport("jensen", tuple(checks))


def mixture_bound_instance(seed):
    """Eight-point source and target blob measures of one seed."""
    cfg = ScenarioConfig(samples_per_class=(3, 3, 2), shift=(1.0, 0.0), rotation=20.0, seed=seed)
    source, target = gen_blobs_pair(cfg)
    return source.to_measure(), target.to_measure()


def mixture_bound_suite(seeds=range(10), num_lambda_draws=20, alpha=0.2):
    checks = []
    for seed in seeds:
        mu, nu = mixture_bound_instance(seed)
        result = mixture_bound_check(mu, nu, MixupConfig(alpha=alpha, seed=seed), num_lambda_draws)
        checks.append(
            Check(
                f"seed {seed}",
                result.lhs - result.rhs,
                2 * result.stderr,
                bool(result.holds),
            )
        )
    return CheckReport("mixture-bound", tuple(checks))


#
# Plan structure on the three-cluster scenario
#


def clusters_diagnostics(seed, m=4, num_draws=200):
    """Cross-class diagnostics of exact and unbalanced minibatch plans of one seed.

    Returns
    -------
    dict
        :class:`otda.minibatch.PlanDiagnostics` under ``"exact"``,
        ``"unbalanced"`` and ``"full"`` (single full-batch exact plan).
    """
    source, target = gen_clusters_scenario(seed)
    src, tgt = source.to_measure(), target.to_measure()
    cost = CostMatrix.sqeuclidean(src.points, tgt.points)
    spec = MinibatchSpec(m=m, k=num_draws, seed=seed)
    unbalanced = SolverConfig(epsilon=0.1, tau=1.0, scale_epsilon=True, kind="unbalanced")
    diagnostics = {}
    for name, cfg in (("exact", SolverConfig()), ("unbalanced", unbalanced)):
        plan = aggregate_plan(src, tgt, cost, name, cfg, spec)
        diagnostics[name] = cross_class_mass(plan, source.labels, target.labels, num_draws)
    full = exact_ot(src, tgt, cost)
    diagnostics["full"] = cross_class_mass(full, source.labels, target.labels)
    return diagnostics


def clusters_suite(seeds=range(5), m=4, num_draws=200):
    checks = []
    for seed in seeds:
        diagnostics = clusters_diagnostics(seed, m, num_draws)
        exact = diagnostics["exact"].cross_class_mass_fraction
        relaxed = diagnostics["unbalanced"]
        excess = abs(diagnostics["full"].excess_cross_class)
        checks.extend(
            [
                above(f"seed {seed} exact cross-class fraction", exact, 0.0),
                below(
                    f"seed {seed} unbalanced cross-class fraction",
                    relaxed.cross_class_mass_fraction,
                    exact,
                ),
                below(f"seed {seed} unbalanced mass", relaxed.total_mass, 1.0),
                at_most(f"seed {seed} full-batch excess cross-class fraction", excess, 1e-9),
            ]
        )
    return CheckReport("clusters", tuple(checks))


#
# Ablation trends
#


def ablation_checks(
    rows, margin=ABLATION_MARGIN, baseline_margin=BASELINE_MARGIN, ceiling=None, capped=()
):
    """Accuracy margins between method variants of a training summary.

    Every variant must beat ``source_only`` by ``baseline_margin``. Variants
    named in ``capped`` transport with balanced plans and cannot exceed
    ``ceiling`` (see :func:`otda.data.balanced_transport_ceiling`); for them
    the requirement is the lower of that gain and reaching
    ``ceiling - baseline_margin``.

    Parameters
    ----------
    rows : list of dict
        Summary rows with ``method`` (variant name) and ``accuracy_mean``.
    ceiling : float, optional
        Accuracy bound of the balanced variants, no cap when omitted.
    capped : iterable of str
        Variant names bounded by ``ceiling``.

    Raises
    ------
    :class:`otda.exceptions.ValidationError`
        If ``source_only`` or ``mixot`` is missing from the grid.
    """
    scores = {row["method"]: row["accuracy_mean"] for row in rows}
    for required in ("source_only", "mixot"):
        if required not in scores:
            msg = f"the ablation needs a {required} row"
            raise ValidationError(msg)
    baseline = scores["source_only"]
    logger.info(f"ablation baseline source_only accuracy {baseline:.4f}")
    capped = set(capped) if ceiling is not None else set()
    if capped:
        logger.info(f"balanced variants capped at class overlap {ceiling:.4f}")
    checks = []
    rivals = [name for name in ("deepjdot", "deepjdot(sce)", "mixot(ce)") if name in scores]
    if rivals:
        gap = scores["mixot"] - max(scores[name] for name in rivals)
        checks.append(at_least("mixot over ablated variants", gap, margin))
    if "mixunbot" in scores:
        checks.append(at_least("mixunbot over mixot", scores["mixunbot"] - scores["mixot"], 0.0))
    for name, score in scores.items():
        if name == "source_only":
            continue
        threshold = baseline_margin
        if name in capped:
            threshold = min(baseline_margin, ceiling - baseline_margin - baseline)
        checks.append(at_least(f"{name} over source_only", score - baseline, threshold))
    return CheckReport("ablation", tuple(checks))
