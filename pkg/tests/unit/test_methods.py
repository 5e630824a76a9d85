import numpy as np
import pytest

import otda
from otda.data import ScenarioConfig, generate_scenario
from otda.measures import SolverConfig
from otda.model import OptimizerState, init_params
from otda.trainer import training_step


@pytest.fixture(scope="module")
def batches():
    scenario = generate_scenario(
        ScenarioConfig(samples_per_class=(4, 4, 4), target_samples_per_class=(6, 4, 2), seed=3)
    )
    source, target = scenario.source, scenario.target
    rows = np.arange(0, 12, 2)
    return (source.points[rows], source.one_hot(rows)), (target.points[:6], target.labels[:6])


@pytest.mark.parametrize("name", ["DeepJDOT", "JUMBOT", "MixOT", "MixUnBOT"])
def test_reference_step_matches_the_training_loop(name, batches):
    """The generic loop and the written-out step agree bit for bit."""
    src_batch, tgt_batch = batches
    method = otda.Method(name)
    solver = SolverConfig(epsilon=0.1, tau=1.0, kind=method.solver_kind)
    cfg = method.train_config(solver)
    params = init_params((2, 8, 4, 3), np.random.default_rng(0))
    state = OptimizerState.initial(params, cfg.optimizer)

    looped, looped_state, record = training_step(
        params, src_batch, tgt_batch, cfg, state, np.random.default_rng(7)
    )
    reference, reference_state, terms, plan = method.reference_step(
        params, src_batch, tgt_batch, cfg, state, np.random.default_rng(7)
    )
    for key, array in looped.tensors().items():
        np.testing.assert_array_equal(reference.tensors()[key], array)
    assert looped_state.step == reference_state.step == 1
    assert record.transfer == terms.transfer
    assert record.plan_mass == float(plan.coupling.sum())


@pytest.mark.parametrize("name", ["DeepJDOT", "MixOT"])
def test_reference_step_uses_the_configured_balanced_solver(name, batches):
    src_batch, tgt_batch = batches
    method = otda.Method(name)
    cfg = method.train_config(SolverConfig(epsilon=0.5, kind="sinkhorn"))
    params = init_params((2, 8, 4, 3), np.random.default_rng(0))
    state = OptimizerState.initial(params, cfg.optimizer)

    looped, _, record = training_step(params, src_batch, tgt_batch, cfg, state, np.random.default_rng(5))
    reference, _, terms, plan = method.reference_step(
        params, src_batch, tgt_batch, cfg, state, np.random.default_rng(5)
    )
    assert plan.solver == "sinkhorn"
    assert record.transfer == terms.transfer
    for key, array in looped.tensors().items():
        np.testing.assert_array_equal(reference.tensors()[key], array)


def test_source_only_reference_step(batches):
    src_batch, tgt_batch = batches
    method = otda.Method("SourceOnly")
    cfg = method.train_config()
    assert cfg.eta3 == 0.0
    params = init_params((2, 8, 4, 3), np.random.default_rng(0))
    state = OptimizerState.initial(params, cfg.optimizer)
    looped, _, record = training_step(params, src_batch, tgt_batch, cfg, state, np.random.default_rng(0))
    reference, _, loss, plan = method.reference_step(params, src_batch, tgt_batch, cfg, state, None)
    assert plan is None
    assert loss == record.source_ce
    np.testing.assert_array_equal(reference.classifier.weight, looped.classifier.weight)


def test_train_config_follows_the_method():
    mixot = otda.Method("MixOT").train_config(SolverConfig(kind="sinkhorn"), batch_size=12)
    assert (mixot.method, mixot.mixup, mixot.label_loss) == ("mixot", True, "sce")
    assert mixot.solver.kind == "sinkhorn"
    assert mixot.batch_size == 12
    jumbot = otda.Method("JUMBOT").train_config(SolverConfig(kind="exact"))
    assert jumbot.solver.kind == "unbalanced"
    ablated = otda.Method("DeepJDOT", label_loss="sce").train_config()
    assert ablated.label_loss == "sce"
    assert ablated.solver.kind == "exact"


def test_base_method_has_no_reference_step():
    from otda.models.base_method import BaseMethod

    with pytest.raises(NotImplementedError):
        BaseMethod().reference_step(None, None, None, None, None, None)
    assert "BaseMethod" in repr(BaseMethod())
