#
# MixUp neighbour distributions with unbalanced transport
#
import numpy as np

from otda.mixup import sample_lambda
from otda.models.base_method import BaseMethod
from otda.solvers import unbalanced_sinkhorn


class MixUnBOT(BaseMethod):
    """MixUp on both domains, symmetric cross-entropy label cost and unbalanced transport.

    Combines the neighbour distributions of :class:`MixOT` with the relaxed
    marginals of :class:`JUMBOT`; the default method of the package.
    """

    key = "mixunbot"
    solver_kind = "unbalanced"
    mixup = True
    default_label_loss = "sce"

    def reference_step(self, params, src_batch, tgt_batch, cfg, state, rng):
        Xs, Ys = (np.asarray(arr, dtype=float) for arr in src_batch)
        Xt = np.asarray(tgt_batch[0], dtype=float)
        lam = sample_lambda(cfg.mixup_config, rng)
        perm_s = rng.permutation(len(Xs))
        perm_t = rng.permutation(len(Xt))
        src_mixed = (lam * Xs + (1 - lam) * Xs[perm_s], lam * Ys + (1 - lam) * Ys[perm_s])
        tgt_mixed = lam * Xt + (1 - lam) * Xt[perm_t]

        def transport(a, b, cost):
            return unbalanced_sinkhorn(a, b, cost, cfg.solver)

        return self._transport_step(
            params, src_mixed, tgt_mixed, src_batch, cfg, state, transport
        )
