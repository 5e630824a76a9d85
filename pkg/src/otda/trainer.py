#
# Alternating plan-solve / gradient-step training loop
#
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import pybamm

from otda.data import BatchStream, random_batches, stratified_batches
from otda.exceptions import SolverError, ValidationError
from otda.logger import logger
from otda.losses import LABEL_LOSSES, LossWeights, build_joint_cost
from otda.measures import DiscreteMeasure, SolverConfig
from otda.minibatch import cross_class_mass
from otda.mixup import MixupConfig, mix_source_batch, mix_target_batch, sample_lambda
from otda.model import (
    OptimizerConfig,
    OptimizerState,
    composite_loss_terms,
    forward_classifier,
    forward_features,
    init_params,
    optimizer_step,
    predict,
    source_loss_and_grads,
)
from otda.solvers import solve

# solver kinds and MixUp switch implied by every named method
METHOD_SWITCHES = {
    "source_only": (("exact", "sinkhorn", "unbalanced"), False),
    "deepjdot": (("exact", "sinkhorn"), False),
    "jumbot": (("unbalanced",), False),
    "mixot": (("exact", "sinkhorn"), True),
    "mixunbot": (("unbalanced",), True),
}


@dataclass(frozen=True)
class TrainConfig:
    """Everything one training run needs besides the data.

    Parameters
    ----------
    method : str
        One of ``source_only``, ``deepjdot``, ``jumbot``, ``mixot``,
        ``mixunbot``. The name fixes the solver family and the MixUp switch.
    mixup : bool
    label_loss : {"ce", "sce"}
    weights : :class:`otda.losses.LossWeights`
    eta3 : float
        Transfer weight, zero for ``source_only``.
    solver : :class:`otda.measures.SolverConfig`
    mixup_config : :class:`otda.mixup.MixupConfig`
    batch_size : int
    stratified : bool
        Stratified source batches.
    epochs, pretrain_epochs : int
    optimizer : :class:`otda.model.OptimizerConfig`
    hidden : tuple of int
    embedding : int
    seed : int
    """

    method: str = "mixunbot"
    mixup: bool = True
    label_loss: str = "sce"
    weights: LossWeights = field(default_factory=LossWeights)
    eta3: float = 1.0
    solver: SolverConfig = field(
        default_factory=lambda: SolverConfig(epsilon=0.1, tau=1.0, kind="unbalanced")
    )
    mixup_config: MixupConfig = field(default_factory=MixupConfig)
    batch_size: int = 30
    stratified: bool = True
    epochs: int = 10
    pretrain_epochs: int = 2
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    hidden: tuple = (32, 32)
    embedding: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHOD_SWITCHES:
            msg = f"unknown method {self.method!r}, expected one of {tuple(METHOD_SWITCHES)}"
            raise ValidationError(msg)
        kinds, mixup = METHOD_SWITCHES[self.method]
        if self.method == "source_only":
            if self.eta3 != 0:
                msg = "source_only trains without a transfer term (eta3 = 0)"
                raise ValidationError(msg)
        else:
            if self.solver.kind not in kinds:
                msg = f"{self.method} solves with {' or '.join(kinds)}, not {self.solver.kind}"
                raise ValidationError(msg)
            if self.mixup != mixup:
                msg = f"{self.method} has mixup={mixup}"
                raise ValidationError(msg)
        if self.label_loss not in LABEL_LOSSES:
            msg = f"unknown label loss {self.label_loss!r}"
            raise ValidationError(msg)
        if self.eta3 < 0:
            msg = "eta3 must be nonnegative"
            raise ValidationError(msg)
        if self.batch_size < 1 or self.epochs < 0 or self.pretrain_epochs < 0:
            msg = "batch_size must be positive and epoch counts nonnegative"
            raise ValidationError(msg)

    @property
    def uses_transfer(self):
        return self.eta3 != 0


@dataclass(frozen=True)
class StepRecord:
    """Diagnostics of one optimizer step; plan fields are NaN without a plan."""

    phase: str
    epoch: int
    step: int
    source_ce: float
    transfer: float = 0.0
    plan_mass: float = float("nan")
    cross_class_fraction: float = float("nan")


@dataclass(frozen=True)
class EpochRecord:
    """Target accuracy after one epoch, overall and per class."""

    phase: str
    epoch: int
    accuracy: float
    per_class: tuple

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            msg = "accuracy must lie in [0, 1]"
            raise ValidationError(msg)


@dataclass(frozen=True)
class TrainHistory:
    steps: tuple = ()
    epochs: tuple = ()
    final_accuracy: float = float("nan")
    final_per_class: tuple = ()

    @property
    def oracle_accuracy(self):
        """Best target accuracy along training, the final one without epochs."""
        if not self.epochs:
            return self.final_accuracy
        return max(record.accuracy for record in self.epochs)

    def step_rows(self, method, seed):
        for record in self.steps:
            yield {
                "method": method,
                "seed": seed,
                "phase": record.phase,
                "epoch": record.epoch,
                "step": record.step,
                "source_ce": record.source_ce,
                "transfer": record.transfer,
                "plan_mass": record.plan_mass,
                "cross_class_fraction": record.cross_class_fraction,
            }

    def epoch_rows(self, method, seed):
        for record in self.epochs:
            row = {"method": method, "seed": seed, "epoch": record.epoch, "accuracy": record.accuracy}
            row.update({f"class_{k}": acc for k, acc in enumerate(record.per_class)})
            yield row


def _mix(src_batch, tgt_batch, cfg, rng):
    """Mixed batches and the permutation and weight used for the target."""
    Xs, Ys = src_batch
    Xt = tgt_batch[0]
    if not cfg.mixup:
        return (Xs, Ys), Xt, 1.0, np.arange(len(Xt))
    lam = sample_lambda(cfg.mixup_config, rng)
    perm_s = rng.permutation(len(Xs))
    lam_t = lam if cfg.mixup_config.shared_lambda else sample_lambda(cfg.mixup_config, rng)
    perm_t = rng.permutation(len(Xt))
    return (
        mix_source_batch((Xs, Ys), lam, perm_s),
        mix_target_batch(Xt, lam_t, perm_t),
        lam_t,
        perm_t,
    )


def dominant_labels(labels, lam, perm):
    """Label of the heavier component of every mixed sample."""
    labels = np.asarray(labels, dtype=int)
    return labels if lam >= 0.5 else labels[perm]


def solve_batch_plan(params, src_mixed, tgt_mixed, cfg):
    """Joint cost of the mixed batches under the current network, and its plan."""
    Xs, Ys = src_mixed
    Es = forward_features(params, Xs)
    Et = forward_features(params, tgt_mixed)
    Pt = forward_classifier(params, Et)
    cost = build_joint_cost(Es, Ys, Et, Pt, cfg.weights, cfg.label_loss)
    a = DiscreteMeasure.uniform(Es)
    b = DiscreteMeasure.uniform(Et)
    return solve(a, b, cost, cfg.solver)


def training_step(params, src_batch, tgt_batch, cfg, state, rng):
    """One alternating step: mix, solve the batch plan, then a gradient step.

    Parameters
    ----------
    params : :class:`otda.model.MlpParams`
    src_batch : tuple
        Source inputs and one-hot labels.
    tgt_batch : tuple
        Target inputs and, for diagnostics only, target labels or ``None``.
    cfg : :class:`TrainConfig`
    state : :class:`otda.model.OptimizerState`
    rng : numpy.random.Generator
        MixUp stream.

    Returns
    -------
    tuple
        ``(params, state, StepRecord)``.
    """
    if not cfg.uses_transfer:
        loss, grads = source_loss_and_grads(params, src_batch, cfg.weights.clip_floor)
        params, state = optimizer_step(params, grads, state)
        return params, state, StepRecord("adapt", 0, state.step, loss)

    src_mixed, tgt_mixed, lam_t, perm_t = _mix(src_batch, tgt_batch, cfg, rng)
    try:
        plan = solve_batch_plan(params, src_mixed, tgt_mixed, cfg)
    except SolverError as error:
        msg = f"step {state.step + 1}: {error}"
        raise SolverError(msg) from error
    terms = composite_loss_terms(
        params, src_mixed, tgt_mixed, plan, src_batch, cfg.weights, cfg.eta3, cfg.label_loss
    )
    params, state = optimizer_step(params, terms.grads, state)

    cross = float("nan")
    tgt_labels = tgt_batch[1] if len(tgt_batch) > 1 else None
    if tgt_labels is not None:
        src_labels = np.argmax(src_mixed[1], axis=1)
        cross = cross_class_mass(
            plan, src_labels, dominant_labels(tgt_labels, lam_t, perm_t)
        ).cross_class_mass_fraction
    record = StepRecord(
        "adapt", 0, state.step, terms.source_ce, terms.transfer, float(plan.coupling.sum()), cross
    )
    return params, state, record


def evaluate(params, ds):
    """Argmax accuracy on ``ds`` overall and per class (NaN for absent classes)."""
    predictions = np.argmax(predict(params, ds.points), axis=1)
    correct = predictions == ds.labels
    per_class = tuple(
        float(correct[ds.labels == k].mean()) if np.any(ds.labels == k) else float("nan")
        for k in range(ds.class_count)
    )
    return float(correct.mean()), per_class


def _source_batches(source, cfg, rng):
    if cfg.stratified:
        return stratified_batches(source, cfg.batch_size, rng)
    return random_batches(len(source), cfg.batch_size, rng)


def fit(cfg, source, target, target_test=None):
    """Pretrain on the source, then adapt to the target.

    Runs ``pretrain_epochs`` of source cross-entropy followed by ``epochs``
    of :func:`training_step` over source batches paired with uniform target
    batches. Accuracy is measured on ``target_test`` (``target`` when
    omitted) after every epoch. Target labels reach only the diagnostics.

    Returns
    -------
    tuple
        ``(MlpParams, TrainHistory)``.
    """
    init_ss, source_ss, target_ss, mixup_ss = np.random.SeedSequence(cfg.seed).spawn(4)
    source_rng = np.random.default_rng(source_ss)
    mixup_rng = np.random.default_rng(mixup_ss)
    dims = (source.dim, *cfg.hidden, cfg.embedding, source.class_count)
    params = init_params(dims, np.random.default_rng(init_ss))
    state = OptimizerState.initial(params, cfg.optimizer)
    evaluation = target if target_test is None else target_test
    one_hot = source.one_hot()

    steps, epochs = [], []
    timer = pybamm.Timer()
    phases = ["pretrain"] * cfg.pretrain_epochs + ["adapt"] * cfg.epochs
    target_stream = None
    if cfg.epochs and cfg.uses_transfer:
        target_stream = BatchStream(len(target), cfg.batch_size, np.random.default_rng(target_ss))
    for epoch, phase in enumerate(phases, start=1):
        for rows in _source_batches(source, cfg, source_rng):
            src_batch = (source.points[rows], one_hot[rows])
            if phase == "pretrain" or target_stream is None:
                loss, grads = source_loss_and_grads(params, src_batch, cfg.weights.clip_floor)
                params, state = optimizer_step(params, grads, state)
                record = StepRecord(phase, epoch, state.step, loss)
            else:
                cols = next(target_stream)
                tgt_batch = (target.points[cols], target.labels[cols])
                params, state, record = training_step(
                    params, src_batch, tgt_batch, cfg, state, mixup_rng
                )
                record = replace(record, epoch=epoch)
            steps.append(record)
        accuracy, per_class = evaluate(params, evaluation)
        epochs.append(EpochRecord(phase, epoch, accuracy, per_class))
        logger.info(f"{cfg.method} seed {cfg.seed} epoch {epoch} ({phase}): accuracy {accuracy:.4f}")

    final_accuracy, final_per_class = evaluate(params, evaluation)
    logger.info(f"{cfg.method} seed {cfg.seed}: trained in {timer.time()}")
    return params, TrainHistory(tuple(steps), tuple(epochs), final_accuracy, final_per_class)
