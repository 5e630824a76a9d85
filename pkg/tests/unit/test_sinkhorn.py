import numpy as np
import pytest

from otda.exceptions import SolverError, ValidationError
from otda.measures import CostMatrix, DiscreteMeasure, SolverConfig
from otda.solvers import (
    exact_ot,
    generalized_kl,
    marginal_kl,
    marginal_violation,
    round_to_marginals,
    sinkhorn,
    solve,
    unbalanced_sinkhorn,
)


def _random_problem(seed, n=5, m=4):
    rng = np.random.default_rng(seed)
    a = DiscreteMeasure(rng.normal(size=(n, 2)), rng.dirichlet(np.ones(n)))
    b = DiscreteMeasure(rng.normal(size=(m, 2)), rng.dirichlet(np.ones(m)))
    return a, b, CostMatrix.sqeuclidean(a.points, b.points)


def test_sinkhorn_marginals():
    a, b, cost = _random_problem(0)
    plan = sinkhorn(a, b, cost, SolverConfig(epsilon=0.5, tolerance=1e-10, max_iterations=5000))
    assert plan.converged
    np.testing.assert_allclose(plan.coupling.sum(axis=1), a.weights, atol=1e-9)
    np.testing.assert_allclose(plan.coupling.sum(axis=0), b.weights, atol=1e-9)
    assert plan.regularized_objective >= plan.objective_value


def test_large_epsilon_gives_independent_coupling():
    a, b, cost = _random_problem(1)
    plan = sinkhorn(a, b, cost, SolverConfig(epsilon=1e6, tolerance=1e-12))
    np.testing.assert_allclose(plan.coupling, np.outer(a.weights, b.weights), atol=1e-5)


def test_single_point_problem():
    a = DiscreteMeasure.uniform([[0.0, 0.0]])
    b = DiscreteMeasure.uniform([[1.0, 1.0]])
    plan = sinkhorn(a, b, CostMatrix.sqeuclidean(a.points, b.points), SolverConfig(epsilon=0.1))
    np.testing.assert_allclose(plan.coupling, [[1.0]])
    assert plan.objective_value == pytest.approx(2.0)


def test_small_epsilon_approaches_exact():
    """The entropic plan costs at most epsilon * KL(exact plan | a x b) more."""
    a, b, cost = _random_problem(2)
    cfg = SolverConfig(
        epsilon=1e-3, scale_epsilon=True, epsilon_scaling=True, tolerance=1e-9, max_iterations=20000
    )
    entropic = sinkhorn(a, b, cost, cfg)
    exact = exact_ot(a, b, cost)
    kl = generalized_kl(exact.coupling.ravel(), np.outer(a.weights, b.weights).ravel())
    slack = 1e-6
    assert entropic.objective_value >= exact.objective_value - slack
    assert entropic.objective_value <= exact.objective_value + cfg.effective_epsilon(cost) * kl + slack


def test_sinkhorn_needs_positive_epsilon_and_probabilities():
    a, b, cost = _random_problem(3)
    with pytest.raises(ValidationError):
        sinkhorn(a, b, cost, SolverConfig(epsilon=0.0))
    half = DiscreteMeasure(a.points, a.weights / 2)
    with pytest.raises(ValidationError):
        sinkhorn(half, b, cost, SolverConfig())


def test_unbalanced_zero_cost_keeps_product():
    """With a zero cost the reference measure is already optimal."""
    a, b, _ = _random_problem(4)
    cost = CostMatrix(np.zeros((len(a), len(b))))
    plan = unbalanced_sinkhorn(a, b, cost, SolverConfig(epsilon=0.1, tau=1.0, tolerance=1e-12))
    np.testing.assert_allclose(plan.coupling, np.outer(a.weights, b.weights), atol=1e-9)


def test_unbalanced_vanishing_tau_closed_form():
    a, b, cost = _random_problem(5)
    eps = 0.3
    plan = unbalanced_sinkhorn(a, b, cost, SolverConfig(epsilon=eps, tau=1e-9, tolerance=1e-12))
    expected = np.outer(a.weights, b.weights) * np.exp(-cost.values / eps)
    np.testing.assert_allclose(plan.coupling, expected, rtol=1e-6, atol=1e-12)


def test_unbalanced_marginal_penalty_shrinks_with_tau():
    a, b, cost = _random_problem(6)
    penalties = []
    for tau in (0.01, 0.1, 1.0, 10.0):
        plan = unbalanced_sinkhorn(
            a, b, cost, SolverConfig(epsilon=0.1, tau=tau, tolerance=1e-10, max_iterations=5000)
        )
        penalties.append(marginal_kl(plan, a, b))
    assert all(later <= earlier + 1e-9 for earlier, later in zip(penalties, penalties[1:]))


def test_unbalanced_needs_positive_tau():
    a, b, cost = _random_problem(7)
    with pytest.raises(ValidationError):
        unbalanced_sinkhorn(a, b, cost, SolverConfig(tau=0.0))


def test_solve_dispatch():
    a, b, cost = _random_problem(8)
    cfg = SolverConfig(epsilon=0.5)
    assert solve(a, b, cost, cfg).solver == "exact"
    assert solve(a, b, cost, cfg, kind="sinkhorn").solver == "sinkhorn"
    assert solve(a, b, cost, cfg, kind="unbalanced").solver == "unbalanced"
    with pytest.raises(ValidationError):
        solve(a, b, cost, cfg, kind="network")


def test_unbalanced_matches_pot():
    ot = pytest.importorskip("ot")
    a, b, cost = _random_problem(9)
    eps, tau = 0.2, 0.5
    cfg = SolverConfig(epsilon=eps, tau=tau, tolerance=1e-13, max_iterations=20000)
    ours = unbalanced_sinkhorn(a, b, cost, cfg)
    theirs = ot.unbalanced.sinkhorn_unbalanced(
        a.weights, b.weights, cost.values, eps, tau, reg_type="kl", numItermax=20000, stopThr=1e-13
    )
    np.testing.assert_allclose(ours.coupling, theirs, atol=1e-6)


def test_sinkhorn_matches_pot():
    ot = pytest.importorskip("ot")
    a, b, cost = _random_problem(10)
    ours = sinkhorn(a, b, cost, SolverConfig(epsilon=0.5, tolerance=1e-12, max_iterations=20000))
    theirs = ot.sinkhorn(a.weights, b.weights, cost.values, 0.5, numItermax=20000, stopThr=1e-12)
    np.testing.assert_allclose(ours.coupling, theirs, atol=1e-6)


def test_capped_sinkhorn_still_meets_both_marginals():
    """A run stopped far from convergence is rounded onto the marginals."""
    a, b, cost = _random_problem(11, n=10, m=10)
    cfg = SolverConfig(epsilon=1e-3, scale_epsilon=True, tolerance=1e-12, max_iterations=50)
    plan = sinkhorn(a, b, cost, cfg)
    assert not plan.converged
    assert plan.marginal_violation < 1e-12
    np.testing.assert_allclose(plan.coupling.sum(axis=1), a.weights, atol=1e-12)
    np.testing.assert_allclose(plan.coupling.sum(axis=0), b.weights, atol=1e-12)
    assert plan.objective_value >= exact_ot(a, b, cost).objective_value - 1e-12


def test_round_to_marginals():
    rng = np.random.default_rng(12)
    a = rng.dirichlet(np.ones(6))
    b = rng.dirichlet(np.ones(5))
    noisy = np.outer(a, b) * rng.uniform(0.8, 1.2, size=(6, 5))
    rounded = round_to_marginals(noisy, a, b)
    assert np.all(rounded >= 0)
    assert marginal_violation(rounded, a, b) < 1e-14
    assert np.abs(rounded - noisy).sum() <= 2 * marginal_violation(noisy, a, b)
    feasible = np.outer(a, b)
    np.testing.assert_allclose(round_to_marginals(feasible, a, b), feasible, atol=1e-15)


def test_round_to_marginals_skips_empty_atoms():
    a = np.array([0.5, 0.0, 0.5])
    b = np.array([0.25, 0.75])
    coupling = np.array([[0.3, 0.3], [0.0, 0.0], [0.0, 0.4]])
    rounded = round_to_marginals(coupling, a, b)
    np.testing.assert_allclose(rounded.sum(axis=1), a, atol=1e-15)
    np.testing.assert_allclose(rounded.sum(axis=0), b, atol=1e-15)
    np.testing.assert_array_equal(rounded[1], 0.0)


@pytest.mark.parametrize("tau", [None, 0.5])
def test_kernel_scaling_matches_absorbed_potentials(tau):
    a, b, cost = _random_problem(13)
    options = dict(epsilon=0.5, tolerance=1e-12, max_iterations=20000)
    if tau is None:
        run = sinkhorn
    else:
        run = unbalanced_sinkhorn
        options["tau"] = tau
    stable = run(a, b, cost, SolverConfig(log_domain=True, **options))
    plain = run(a, b, cost, SolverConfig(log_domain=False, **options))
    assert stable.converged
    assert plain.converged
    np.testing.assert_allclose(plain.coupling, stable.coupling, atol=1e-9)


def test_kernel_scaling_underflow_raises():
    a = DiscreteMeasure.uniform([[0.0, 0.0], [0.0, 1.0]])
    b = DiscreteMeasure.uniform([[5.0, 5.0], [6.0, 6.0]])
    cost = CostMatrix.sqeuclidean(a.points, b.points)
    with pytest.raises(SolverError, match="log_domain"):
        sinkhorn(a, b, cost, SolverConfig(epsilon=0.01, log_domain=False))
    with pytest.raises(SolverError, match="log_domain"):
        unbalanced_sinkhorn(a, b, cost, SolverConfig(epsilon=0.01, tau=1.0, log_domain=False))
    plan = sinkhorn(a, b, cost, SolverConfig(epsilon=0.01, max_iterations=5000))
    assert plan.marginal_violation < 1e-12
