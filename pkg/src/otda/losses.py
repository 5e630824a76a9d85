#
# Cross-entropy, symmetric cross-entropy and the joint feature-label ground cost
#
from dataclasses import dataclass

import numpy as np

from otda.exceptions import DimensionError, ValidationError
from otda.measures import CostMatrix

CLIP_FLOOR = 1e-7
LABEL_LOSSES = ("ce", "sce")
# tolerance on the sum of a probability vector passed to a loss
SIMPLEX_TOL = 1e-6


@dataclass(frozen=True)
class LossWeights:
    """Coefficients of the joint ground cost and of the symmetric cross-entropy.

    Parameters
    ----------
    eta1 : float
        Weight of the squared embedding distance in the ground cost.
    eta2 : float
        Weight of the label loss in the ground cost.
    eta4 : float
        Forward cross-entropy coefficient of the symmetric loss.
    eta5 : float
        Reverse cross-entropy coefficient of the symmetric loss.
    clip_floor : float
        Lower clip applied to every probability inside a logarithm.
    """

    eta1: float = 0.1
    eta2: float = 0.1
    eta4: float = 0.01
    eta5: float = 1.0
    clip_floor: float = CLIP_FLOOR

    def __post_init__(self):
        for name in ("eta1", "eta2", "eta4", "eta5"):
            if not getattr(self, name) >= 0:
                msg = f"{name} must be nonnegative"
                raise ValidationError(msg)
        if not 0 < self.clip_floor < 1:
            msg = "clip_floor must lie in (0, 1)"
            raise ValidationError(msg)


def _as_simplex(q, name):
    q = np.asarray(q, dtype=float)
    if np.any(q < 0) or not np.all(np.isfinite(q)):
        msg = f"{name} must have finite nonnegative entries"
        raise ValidationError(msg)
    if np.any(np.abs(q.sum(axis=-1) - 1) > SIMPLEX_TOL):
        msg = f"{name} must sum to one"
        raise ValidationError(msg)
    return q


def cross_entropy(q, q_pred, clip_floor=CLIP_FLOOR):
    """Cross-entropy ``-sum_i q_i log(max(q_pred_i, clip_floor))``.

    Examples
    --------
    >>> round(cross_entropy([1, 0], [0.9, 0.1]), 5)
    0.10536
    """
    q = _as_simplex(q, "q")
    q_pred = _as_simplex(q_pred, "q_pred")
    if q.shape != q_pred.shape:
        msg = f"probability vectors of lengths {q.shape[-1]} and {q_pred.shape[-1]}"
        raise DimensionError(msg)
    return float(-np.sum(q * np.log(np.maximum(q_pred, clip_floor))))


def symmetric_cross_entropy(q, q_pred, weights):
    """``eta4 * CE(q, q_pred) + eta5 * CE(q_pred, q)``, both logs clipped."""
    return weights.eta4 * cross_entropy(q, q_pred, weights.clip_floor) + weights.eta5 * (
        cross_entropy(q_pred, q, weights.clip_floor)
    )


def pairwise_cross_entropy(Q, P, clip_floor=CLIP_FLOOR):
    """Matrix of ``CE(Q_i, P_j)`` for all rows of ``Q`` and ``P``."""
    return -Q @ np.log(np.maximum(P, clip_floor)).T


def pairwise_label_loss(Q, P, weights, label_loss="sce"):
    """Matrix of ``label_loss(Q_i, P_j)`` for source labels ``Q`` and predictions ``P``.

    Parameters
    ----------
    Q : array-like, shape (n, K)
        Source label vectors (one-hot or mixed).
    P : array-like, shape (m, K)
        Target class-probability predictions.
    weights : :class:`LossWeights`
    label_loss : {"ce", "sce"}
    """
    Q = np.atleast_2d(_as_simplex(Q, "source labels"))
    P = np.atleast_2d(_as_simplex(P, "target predictions"))
    if Q.shape[1] != P.shape[1]:
        msg = f"{Q.shape[1]} source classes but {P.shape[1]} predicted classes"
        raise DimensionError(msg)
    if label_loss == "ce":
        return pairwise_cross_entropy(Q, P, weights.clip_floor)
    if label_loss == "sce":
        forward = pairwise_cross_entropy(Q, P, weights.clip_floor)
        reverse = pairwise_cross_entropy(P, Q, weights.clip_floor).T
        return weights.eta4 * forward + weights.eta5 * reverse
    msg = f"unknown label loss {label_loss!r}, expected one of {LABEL_LOSSES}"
    raise ValidationError(msg)


def build_joint_cost(src_embed, src_onehot, tgt_embed, tgt_pred, weights, label_loss="sce"):
    """Joint ground cost between labeled source and predicted target samples.

    Entry ``(i, j)`` is ``eta1 * |e_i - e_j|^2 + eta2 * label_loss(y_i, p_j)``.

    Returns
    -------
    :class:`otda.measures.CostMatrix`
        Tagged ``"joint-ce"`` or ``"joint-sce"``.
    """
    src_embed = np.atleast_2d(np.asarray(src_embed, dtype=float))
    tgt_embed = np.atleast_2d(np.asarray(tgt_embed, dtype=float))
    if np.isnan(src_embed).any() or np.isnan(tgt_embed).any():
        msg = "embeddings contain NaN"
        raise ValidationError(msg)
    features = CostMatrix.sqeuclidean(src_embed, tgt_embed).values
    labels = pairwise_label_loss(src_onehot, tgt_pred, weights, label_loss)
    if labels.shape != features.shape:
        msg = f"{labels.shape[0]} source labels and {labels.shape[1]} predictions for a {features.shape} cost"
        raise DimensionError(msg)
    return CostMatrix(weights.eta1 * features + weights.eta2 * labels, f"joint-{label_loss}")
