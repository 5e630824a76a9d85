#
# Joint distribution optimal transport on minibatches
#
from otda.models.base_method import BaseMethod
from otda.solvers import solve


class DeepJDOT(BaseMethod):
    """Balanced minibatch transport on the joint embedding-label cost, with a
    cross-entropy label term and no MixUp.
    """

    key = "deepjdot"
    solver_kind = "exact"
    mixup = False
    default_label_loss = "ce"

    def reference_step(self, params, src_batch, tgt_batch, cfg, state, rng):
        def transport(a, b, cost):
            return solve(a, b, cost, cfg.solver)

        return self._transport_step(
            params, src_batch, tgt_batch[0], src_batch, cfg, state, transport
        )
