#
# Source-only baseline
#
from otda.model import optimizer_step, source_loss_and_grads
from otda.models.base_method import BaseMethod


class SourceOnly(BaseMethod):
    """Supervised training on the source domain alone, without a transfer term.

    Parameters
    ----------
    label_loss : str, optional
        Accepted for a uniform interface; the baseline has no label cost.
    """

    key = "source_only"
    transfer = False

    def reference_step(self, params, src_batch, tgt_batch, cfg, state, rng):
        loss, grads = source_loss_and_grads(params, src_batch, cfg.weights.clip_floor)
        params, state = optimizer_step(params, grads, state)
        return params, state, loss, None
