#
# MixUp neighbour distributions with balanced transport
#
from otda.mixup import sample_lambda
from otda.models.base_method import BaseMethod
from otda.solvers import solve


class MixOT(BaseMethod):
    """Balanced minibatch transport between MixUp neighbour batches of both
    domains, with a symmetric cross-entropy label term.

    The source batch is mixed with its labels; the target batch is mixed on
    inputs only and labeled by the network prediction on the mixture.
    """

    key = "mixot"
    solver_kind = "exact"
    mixup = True
    default_label_loss = "sce"

    def reference_step(self, params, src_batch, tgt_batch, cfg, state, rng):
        Xs, Ys = src_batch
        Xt = tgt_batch[0]
        lam = sample_lambda(cfg.mixup_config, rng)
        perm_s = rng.permutation(len(Xs))
        perm_t = rng.permutation(len(Xt))
        src_mixed = (lam * Xs + (1 - lam) * Xs[perm_s], lam * Ys + (1 - lam) * Ys[perm_s])
        tgt_mixed = lam * Xt + (1 - lam) * Xt[perm_t]

        def transport(a, b, cost):
            return solve(a, b, cost, cfg.solver)

        return self._transport_step(
            params, src_mixed, tgt_mixed, src_batch, cfg, state, transport
        )
