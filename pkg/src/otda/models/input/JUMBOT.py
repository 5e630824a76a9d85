#
# Joint unbalanced minibatch optimal transport
#
from otda.models.base_method import BaseMethod
from otda.solvers import unbalanced_sinkhorn


class JUMBOT(BaseMethod):
    """Unbalanced entropic minibatch transport on the joint cost, with a
    cross-entropy label term and no MixUp. The relaxed marginals let the plan
    drop mass on samples without a counterpart.
    """

    key = "jumbot"
    solver_kind = "unbalanced"
    mixup = False
    default_label_loss = "ce"

    def reference_step(self, params, src_batch, tgt_batch, cfg, state, rng):
        def transport(a, b, cost):
            return unbalanced_sinkhorn(a, b, cost, cfg.solver)

        return self._transport_step(
            params, src_batch, tgt_batch[0], src_batch, cfg, state, transport
        )
