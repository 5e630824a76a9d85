#
# Base class of the domain adaptation methods
#
from dataclasses import replace

from otda.exceptions import ValidationError
from otda.losses import LABEL_LOSSES, build_joint_cost
from otda.measures import DiscreteMeasure, SolverConfig
from otda.model import (
    composite_loss_terms,
    forward_classifier,
    forward_features,
    optimizer_step,
)
from otda.trainer import TrainConfig


class BaseMethod:
    """Switch settings of a domain adaptation method.

    A method fixes the transport family, whether both domains are mixed with
    MixUp, and the default label loss of the ground cost. Subclasses
    implement :meth:`reference_step`, a straight-line version of one
    training step used to check the generic loop of :mod:`otda.trainer`.

    Parameters
    ----------
    label_loss : {"ce", "sce"}, optional
        Overrides the default label loss (ablation variants).
    """

    key = "base"
    solver_kind = "exact"
    mixup = False
    default_label_loss = "ce"
    transfer = True

    def __init__(self, label_loss=None):
        label_loss = self.default_label_loss if label_loss is None else str(label_loss).lower()
        if label_loss not in LABEL_LOSSES:
            msg = f"unknown label loss {label_loss!r}, expected one of {LABEL_LOSSES}"
            raise ValidationError(msg)
        self.label_loss = label_loss

    @property
    def variant(self):
        """Name of the variant, e.g. ``mixot`` or ``deepjdot(sce)``."""
        if self.label_loss == self.default_label_loss or not self.transfer:
            return self.key
        return f"{self.key}({self.label_loss})"

    def solver_config(self, solver):
        """``solver`` with the kind this method transports with."""
        if self.solver_kind == "exact" and solver.kind in ("exact", "sinkhorn"):
            return solver
        return replace(solver, kind=self.solver_kind)

    def train_config(self, solver=None, **options):
        """:class:`otda.trainer.TrainConfig` of this method.

        ``options`` are the remaining :class:`TrainConfig` fields.
        """
        solver = SolverConfig(kind=self.solver_kind) if solver is None else solver
        if not self.transfer:
            options["eta3"] = 0.0
        return TrainConfig(
            method=self.key,
            mixup=self.mixup,
            label_loss=self.label_loss,
            solver=self.solver_config(solver),
            **options,
        )

    def reference_step(self, params, src_batch, tgt_batch, cfg, state, rng):
        """One training step written out for this method only.

        Returns
        -------
        tuple
            ``(params, state, CompositeLoss, TransportPlan)``
        """
        raise NotImplementedError

    def _transport_step(self, params, src_mixed, tgt_mixed, src_raw, cfg, state, transport):
        """Solve the batch plan with ``transport`` and take one optimizer step."""
        Xs, Ys = src_mixed
        Es = forward_features(params, Xs)
        Et = forward_features(params, tgt_mixed)
        cost = build_joint_cost(Es, Ys, Et, forward_classifier(params, Et), cfg.weights, self.label_loss)
        plan = transport(DiscreteMeasure.uniform(Es), DiscreteMeasure.uniform(Et), cost)
        terms = composite_loss_terms(
            params, src_mixed, tgt_mixed, plan, src_raw, cfg.weights, cfg.eta3, self.label_loss
        )
        params, state = optimizer_step(params, terms.grads, state)
        return params, state, terms, plan

    def __repr__(self):
        return f"<{type(self).__module__}.{type(self).__name__} object>"
