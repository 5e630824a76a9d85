from dataclasses import replace

import numpy as np
import pytest

from otda.data import LabeledDataset, ScenarioConfig, generate_scenario
from otda.exceptions import ValidationError
from otda.measures import SolverConfig
from otda.model import OptimizerState, init_params
from otda.trainer import (
    EpochRecord,
    TrainConfig,
    TrainHistory,
    dominant_labels,
    evaluate,
    fit,
    training_step,
)


def _scenario(seed=0):
    cfg = ScenarioConfig(
        samples_per_class=(20, 20, 20), target_samples_per_class=(30, 20, 10), shift=(0.5, 0.0), seed=seed
    )
    return generate_scenario(cfg)


def _batches(scenario, m=6):
    source, target = scenario.source, scenario.target
    rows = np.arange(m)
    src_batch = (source.points[rows], source.one_hot(rows))
    tgt_batch = (target.points[:m], target.labels[:m])
    return src_batch, tgt_batch


def test_config_enforces_method_switches():
    with pytest.raises(ValidationError):
        TrainConfig(method="jumbot", mixup=False, solver=SolverConfig(kind="exact"))
    with pytest.raises(ValidationError):
        TrainConfig(method="mixot", mixup=False, solver=SolverConfig(kind="exact"))
    with pytest.raises(ValidationError):
        TrainConfig(method="source_only", eta3=1.0)
    with pytest.raises(ValidationError):
        TrainConfig(method="neural")
    with pytest.raises(ValidationError):
        TrainConfig(label_loss="focal")
    cfg = TrainConfig(method="deepjdot", mixup=False, solver=SolverConfig(kind="sinkhorn"))
    assert cfg.uses_transfer


def test_dominant_labels():
    labels = np.array([0, 1, 2])
    perm = np.array([2, 0, 1])
    np.testing.assert_array_equal(dominant_labels(labels, 0.7, perm), [0, 1, 2])
    np.testing.assert_array_equal(dominant_labels(labels, 0.2, perm), [2, 0, 1])


def test_source_only_step():
    scenario = _scenario()
    src_batch, tgt_batch = _batches(scenario)
    cfg = TrainConfig(method="source_only", mixup=False, eta3=0.0)
    params = init_params((2, 8, 4, 3), np.random.default_rng(0))
    state = OptimizerState.initial(params, cfg.optimizer)
    _, state, record = training_step(params, src_batch, tgt_batch, cfg, state, np.random.default_rng(1))
    assert state.step == 1
    assert record.transfer == 0.0
    assert np.isnan(record.plan_mass)


@pytest.mark.parametrize(
    "method,mixup,kind",
    [("deepjdot", False, "exact"), ("mixot", True, "sinkhorn"), ("mixunbot", True, "unbalanced")],
)
def test_transfer_step_records_plan_diagnostics(method, mixup, kind):
    scenario = _scenario()
    src_batch, tgt_batch = _batches(scenario)
    cfg = TrainConfig(method=method, mixup=mixup, solver=SolverConfig(epsilon=0.1, kind=kind))
    params = init_params((2, 8, 4, 3), np.random.default_rng(0))
    state = OptimizerState.initial(params, cfg.optimizer)
    updated, state, record = training_step(
        params, src_batch, tgt_batch, cfg, state, np.random.default_rng(1)
    )
    assert state.step == 1
    assert record.transfer > 0
    assert 0.0 <= record.cross_class_fraction <= 1.0
    if kind == "unbalanced":
        assert 0.0 < record.plan_mass < 1.0
    else:
        assert record.plan_mass == pytest.approx(1.0, abs=1e-6)
    assert not np.array_equal(updated.classifier.weight, params.classifier.weight)


def test_target_labels_only_reach_diagnostics():
    scenario = _scenario()
    src_batch, tgt_batch = _batches(scenario)
    cfg = TrainConfig(method="mixunbot")
    params = init_params((2, 8, 4, 3), np.random.default_rng(0))
    state = OptimizerState.initial(params, cfg.optimizer)
    with_labels = training_step(params, src_batch, tgt_batch, cfg, state, np.random.default_rng(2))
    without = training_step(params, src_batch, (tgt_batch[0],), cfg, state, np.random.default_rng(2))
    np.testing.assert_array_equal(with_labels[0].classifier.weight, without[0].classifier.weight)
    assert np.isnan(without[2].cross_class_fraction)


def test_evaluate_marks_absent_classes():
    params = init_params((2, 4, 3, 3), np.random.default_rng(0))
    ds = LabeledDataset(np.zeros((4, 2)), [0, 0, 1, 1], 3, "target")
    accuracy, per_class = evaluate(params, ds)
    assert 0.0 <= accuracy <= 1.0
    assert len(per_class) == 3
    assert np.isnan(per_class[2])


def test_fit_history_and_reproducibility():
    scenario = _scenario(1)
    cfg = TrainConfig(batch_size=6, epochs=2, pretrain_epochs=1, hidden=(8,), embedding=4, seed=5)
    params, history = fit(cfg, scenario.source, scenario.target)
    again, repeat = fit(cfg, scenario.source, scenario.target)
    # 20 samples per class at 2 per batch
    assert len(history.steps) == 3 * 10
    assert [record.phase for record in history.epochs] == ["pretrain", "adapt", "adapt"]
    assert history.oracle_accuracy >= history.final_accuracy
    assert history.final_accuracy == repeat.final_accuracy
    np.testing.assert_array_equal(params.classifier.weight, again.classifier.weight)
    assert params.dims == (2, 8, 4, 3)
    adapt = [record for record in history.steps if record.phase == "adapt"]
    assert all(record.plan_mass > 0 for record in adapt)


def test_fit_seed_changes_the_run():
    scenario = _scenario(2)
    base = TrainConfig(batch_size=6, epochs=1, pretrain_epochs=0, hidden=(8,), embedding=4, seed=0)
    first, _ = fit(base, scenario.source, scenario.target)
    second, _ = fit(replace(base, seed=1), scenario.source, scenario.target)
    assert not np.array_equal(first.classifier.weight, second.classifier.weight)


def test_history_rows_and_oracle():
    history = TrainHistory(
        epochs=(EpochRecord("adapt", 1, 0.8, (1.0, 0.6)), EpochRecord("adapt", 2, 0.7, (0.9, 0.5))),
        final_accuracy=0.7,
        final_per_class=(0.9, 0.5),
    )
    assert history.oracle_accuracy == 0.8
    rows = list(history.epoch_rows("mixot", 3))
    assert rows[1] == {"method": "mixot", "seed": 3, "epoch": 2, "accuracy": 0.7, "class_0": 0.9, "class_1": 0.5}
    assert TrainHistory(final_accuracy=0.4).oracle_accuracy == 0.4
    with pytest.raises(ValidationError):
        EpochRecord("adapt", 1, 1.5, ())
