import pytest

from otda import checks
from otda.exceptions import CheckFailure, ValidationError


def _rows(**scores):
    return [{"method": name, "accuracy_mean": value} for name, value in scores.items()]


def test_check_constructors():
    assert checks.at_most("a", 1.0, 1.0).passed
    assert not checks.below("b", 1.0, 1.0).passed
    assert checks.at_least("c", 1.0, 1.0).passed
    assert not checks.above("d", 1.0, 1.0).passed
    assert checks.at_most("e", 0.5, 1.0).as_dict() == {
        "name": "e",
        "value": 0.5,
        "threshold": 1.0,
        "passed": True,
    }


def test_report_document_and_failure():
    report = checks.CheckReport("demo", (checks.at_most("ok", 0, 1), checks.at_most("bad", 2, 1)))
    assert not report.passed
    assert [check.name for check in report.failures()] == ["bad"]
    document = report.as_document()
    assert document["kind"] == "demo"
    assert document["passed"] is False
    assert len(document["checks"]) == 2
    with pytest.raises(CheckFailure, match="1 of 2 checks failed \\(bad\\)"):
        report.raise_for_failure()


def test_solver_oracle_suite_passes():
    report = checks.solver_oracle_suite(num_instances=10, seed=1)
    assert report.kind == "solver-oracle"
    assert report.passed
    report.raise_for_failure()


def test_gradcheck_suite_passes_on_one_seed():
    report = checks.gradcheck_suite(seeds=[3])
    assert len(report.checks) == 2
    assert report.passed


def test_mixture_bound_instance_has_eight_points():
    mu, nu = checks.mixture_bound_instance(0)
    assert len(mu) == len(nu) == 8
    assert mu.is_probability()


def test_ablation_checks_pass_on_a_clear_ordering():
    report = checks.ablation_checks(
        _rows(source_only=0.6, deepjdot=0.7, mixot=0.8, mixunbot=0.85)
    )
    assert report.passed
    assert len(report.checks) == 5


def test_ablation_checks_flag_a_small_margin():
    report = checks.ablation_checks(_rows(source_only=0.6, deepjdot=0.7, mixot=0.71))
    assert [check.name for check in report.failures()] == ["mixot over ablated variants"]


def test_ablation_needs_baseline_and_mixot():
    with pytest.raises(ValidationError):
        checks.ablation_checks(_rows(mixot=0.8))
    with pytest.raises(ValidationError):
        checks.ablation_checks(_rows(source_only=0.5))


def test_balanced_variants_are_held_to_the_class_overlap_ceiling():
    rows = _rows(source_only=0.9, deepjdot=0.62, mixot=0.65, jumbot=0.93, mixunbot=0.96)
    report = checks.ablation_checks(rows, ceiling=0.65, capped=["deepjdot", "mixot"])
    thresholds = {check.name: check.threshold for check in report.checks}
    assert thresholds["deepjdot over source_only"] == pytest.approx(0.65 - 0.05 - 0.9)
    assert thresholds["jumbot over source_only"] == pytest.approx(0.05)
    assert [check.name for check in report.failures()] == ["jumbot over source_only"]
    uncapped = checks.ablation_checks(rows, capped=["deepjdot", "mixot"])
    assert "deepjdot over source_only" in [check.name for check in uncapped.failures()]


def test_ceiling_never_loosens_a_weak_baseline():
    rows = _rows(source_only=0.4, deepjdot=0.43, mixot=0.6)
    report = checks.ablation_checks(rows, ceiling=0.9, capped=["deepjdot", "mixot"])
    assert [check.name for check in report.failures()] == ["deepjdot over source_only"]
