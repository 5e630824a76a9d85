#
# Multilayer perceptron: feature extractor, classifier and manual backpropagation
#
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import softmax

from otda import io
from otda.exceptions import DimensionError, ValidationError
from otda.losses import CLIP_FLOOR, build_joint_cost

ACTIVATIONS = ("relu", "linear", "tanh")
DEFAULT_DIMS = (2, 32, 32, 16, 3)
CHECKPOINT_FORMAT = "otda.mlp"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class DenseLayer:
    """Affine map ``X @ weight + bias`` followed by an elementwise activation."""

    weight: np.ndarray
    bias: np.ndarray
    activation: str = "relu"

    def __post_init__(self):
        weight = np.atleast_2d(np.asarray(self.weight, dtype=float))
        bias = np.asarray(self.bias, dtype=float).reshape(-1)
        if bias.shape[0] != weight.shape[1]:
            msg = f"bias of length {bias.shape[0]} for {weight.shape[1]} outputs"
            raise DimensionError(msg)
        if not (np.all(np.isfinite(weight)) and np.all(np.isfinite(bias))):
            msg = "layer parameters must be finite"
            raise ValidationError(msg)
        if self.activation not in ACTIVATIONS:
            msg = f"unknown activation {self.activation!r}"
            raise ValidationError(msg)
        object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "bias", bias)

    @property
    def fan_in(self):
        return self.weight.shape[0]

    @property
    def fan_out(self):
        return self.weight.shape[1]


@dataclass(frozen=True)
class MlpParams:
    """Weights of the feature extractor ``g`` and the linear classifier ``f``.

    ``dims`` reads ``(input, hidden..., embedding, classes)``.
    """

    feature_layers: tuple
    classifier: DenseLayer

    def __post_init__(self):
        object.__setattr__(self, "feature_layers", tuple(self.feature_layers))
        layers = [*self.feature_layers, self.classifier]
        for before, after in zip(layers[:-1], layers[1:]):
            if before.fan_out != after.fan_in:
                msg = f"layer of width {before.fan_out} feeds a layer expecting {after.fan_in}"
                raise DimensionError(msg)
        if self.classifier.activation != "linear":
            msg = "the classifier layer must be linear"
            raise ValidationError(msg)

    @property
    def dims(self):
        first = self.feature_layers[0] if self.feature_layers else self.classifier
        return (first.fan_in, *(layer.fan_out for layer in self.feature_layers), self.classifier.fan_out)

    @property
    def activations(self):
        return tuple(layer.activation for layer in self.feature_layers)

    def tensors(self):
        """Parameter arrays by name, feature layers first."""
        named = {}
        for i, layer in enumerate(self.feature_layers):
            named[f"feature.{i}.weight"] = layer.weight
            named[f"feature.{i}.bias"] = layer.bias
        named["classifier.weight"] = self.classifier.weight
        named["classifier.bias"] = self.classifier.bias
        return named

    def with_tensors(self, tensors):
        """Copy of the parameters with arrays replaced by ``tensors``."""
        layers = tuple(
            DenseLayer(tensors[f"feature.{i}.weight"], tensors[f"feature.{i}.bias"], layer.activation)
            for i, layer in enumerate(self.feature_layers)
        )
        classifier = DenseLayer(tensors["classifier.weight"], tensors["classifier.bias"], "linear")
        return MlpParams(layers, classifier)


@dataclass(frozen=True)
class GradientSet:
    """One gradient array per parameter tensor, keyed like :meth:`MlpParams.tensors`."""

    tensors: dict

    def check_matches(self, params):
        expected = params.tensors()
        if expected.keys() != self.tensors.keys() or any(
            expected[name].shape != grad.shape for name, grad in self.tensors.items()
        ):
            msg = "gradient shapes do not match the parameters"
            raise DimensionError(msg)

    def __add__(self, other):
        return GradientSet({name: grad + other.tensors[name] for name, grad in self.tensors.items()})

    def max_abs(self):
        return max(float(np.max(np.abs(grad))) for grad in self.tensors.values())


def init_params(dims=DEFAULT_DIMS, rng=None, activations=None):
    """He-uniform weights ``U(-sqrt(6 / fan_in), sqrt(6 / fan_in))``, zero biases.

    Parameters
    ----------
    dims : sequence of int
        ``(input, hidden..., embedding, classes)``, at least three entries.
    rng : numpy.random.Generator, optional
    activations : sequence of str, optional
        One tag per feature layer, ReLU everywhere when omitted.
    """
    dims = tuple(int(d) for d in dims)
    if len(dims) < 3 or min(dims) < 1:
        msg = f"dims must list at least input, embedding and class sizes, got {dims}"
        raise ValidationError(msg)
    rng = np.random.default_rng(0) if rng is None else rng
    num_features = len(dims) - 2
    activations = ("relu",) * num_features if activations is None else tuple(activations)
    if len(activations) != num_features:
        msg = f"{num_features} feature layers but {len(activations)} activations"
        raise ValidationError(msg)

    def layer(fan_in, fan_out, activation):
        limit = np.sqrt(6.0 / fan_in)
        return DenseLayer(rng.uniform(-limit, limit, (fan_in, fan_out)), np.zeros(fan_out), activation)

    features = tuple(
        layer(dims[i], dims[i + 1], activations[i]) for i in range(num_features)
    )
    return MlpParams(features, layer(dims[-2], dims[-1], "linear"))


def _activate(z, activation):
    if activation == "relu":
        return np.maximum(z, 0.0)
    if activation == "tanh":
        return np.tanh(z)
    return z


def _activation_grad(z, h, activation):
    if activation == "relu":
        return (z > 0).astype(float)
    if activation == "tanh":
        return 1.0 - h**2
    return np.ones_like(z)


def _check_input(X, width, what):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != width:
        msg = f"{what} of dimension {X.shape[1]}, expected {width}"
        raise DimensionError(msg)
    return X


def _feature_pass(params, X):
    """Embeddings and the per-layer ``(input, pre-activation, output)`` memory."""
    h = _check_input(X, params.dims[0], "input")
    memory = []
    for layer in params.feature_layers:
        z = h @ layer.weight + layer.bias
        out = _activate(z, layer.activation)
        memory.append((h, z, out))
        h = out
    return h, memory


def _feature_backward(params, memory, dE):
    grads = {}
    dH = dE
    for i in reversed(range(len(params.feature_layers))):
        layer = params.feature_layers[i]
        h, z, out = memory[i]
        dZ = dH * _activation_grad(z, out, layer.activation)
        grads[f"feature.{i}.weight"] = h.T @ dZ
        grads[f"feature.{i}.bias"] = dZ.sum(axis=0)
        dH = dZ @ layer.weight.T
    return grads


def forward_features(params, X):
    """Penultimate representation ``g(X)``."""
    return _feature_pass(params, X)[0]


def forward_classifier(params, E):
    """Class probabilities ``softmax(E @ W + b)``, one row per embedding."""
    E = _check_input(E, params.classifier.fan_in, "embedding")
    return softmax(E @ params.classifier.weight + params.classifier.bias, axis=1)


def predict(params, X):
    return forward_classifier(params, forward_features(params, X))


def _softmax_backward(P, dP):
    return P * (dP - np.sum(P * dP, axis=1, keepdims=True))


def _clipped_log_grad(Q, P, clip_floor):
    """Derivative of ``-sum Q log max(P, clip)`` with respect to ``P``."""
    return np.where(P > clip_floor, -Q / np.maximum(P, clip_floor), 0.0)


@dataclass(frozen=True)
class CompositeLoss:
    """Terms of the training objective and its gradient.

    ``total = source_ce + eta3 * transfer`` where ``transfer = <plan, C>``.
    """

    source_ce: float
    transfer: float
    eta3: float
    grads: GradientSet

    @property
    def total(self):
        return self.source_ce + self.eta3 * self.transfer


def source_loss_and_grads(params, src_raw, clip_floor=CLIP_FLOOR):
    """Mean clipped cross-entropy over a labeled batch and its gradient."""
    X, Y = src_raw
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    E, memory = _feature_pass(params, X)
    P = forward_classifier(params, E)
    if Y.shape != P.shape:
        msg = f"labels of shape {Y.shape} for predictions of shape {P.shape}"
        raise DimensionError(msg)
    n = Y.shape[0]
    loss = float(-np.sum(Y * np.log(np.maximum(P, clip_floor))) / n)
    dZ = _softmax_backward(P, _clipped_log_grad(Y, P, clip_floor) / n)
    grads = _feature_backward(params, memory, dZ @ params.classifier.weight.T)
    grads["classifier.weight"] = E.T @ dZ
    grads["classifier.bias"] = dZ.sum(axis=0)
    return loss, GradientSet(grads)


def composite_loss_terms(
    params, src_mixed, tgt_mixed, plan, src_raw, weights, eta3, label_loss="sce"
):
    """Source cross-entropy plus the plan-weighted joint cost, with gradients.

    The plan is a constant. With ``eta3 == 0`` the transfer term is skipped
    and the result is the plain source objective.

    Parameters
    ----------
    params : :class:`MlpParams`
    src_mixed : tuple of array-like
        Mixed source inputs ``(m_s, d)`` and label vectors ``(m_s, K)``.
    tgt_mixed : array-like
        Mixed target inputs ``(m_t, d)``.
    plan : :class:`otda.measures.TransportPlan`
        Coupling of shape ``(m_s, m_t)``.
    src_raw : tuple of array-like
        Unmixed source inputs and one-hot labels for the cross-entropy term.
    weights : :class:`otda.losses.LossWeights`
    eta3 : float
        Weight of the transfer term.
    label_loss : {"ce", "sce"}

    Returns
    -------
    :class:`CompositeLoss`
    """
    source_ce, grads = source_loss_and_grads(params, src_raw, weights.clip_floor)
    if eta3 == 0:
        return CompositeLoss(source_ce, 0.0, 0.0, grads)

    Xs, Ys = src_mixed
    Ys = np.atleast_2d(np.asarray(Ys, dtype=float))
    pi = plan.coupling
    Es, memory_s = _feature_pass(params, Xs)
    Et, memory_t = _feature_pass(params, tgt_mixed)
    if pi.shape != (Es.shape[0], Et.shape[0]) or Ys.shape[0] != Es.shape[0]:
        msg = f"plan of shape {pi.shape} for batches of sizes {Es.shape[0]} and {Et.shape[0]}"
        raise DimensionError(msg)
    Pt = forward_classifier(params, Et)
    cost = build_joint_cost(Es, Ys, Et, Pt, weights, label_loss)
    transfer = float(np.sum(pi * cost.values))
    if not np.isfinite(source_ce + eta3 * transfer):
        msg = "non-finite loss"
        raise ValidationError(msg)

    scale = 2.0 * eta3 * weights.eta1
    row_mass = pi.sum(axis=1)[:, None]
    col_mass = pi.sum(axis=0)[:, None]
    dEs = scale * (row_mass * Es - pi @ Et)
    dEt = scale * (col_mass * Et - pi.T @ Es)

    clip = weights.clip_floor
    dPt = _clipped_log_grad(pi.T @ Ys, Pt, clip)
    if label_loss == "sce":
        dPt = weights.eta4 * dPt - weights.eta5 * (pi.T @ np.log(np.maximum(Ys, clip)))
    dZt = _softmax_backward(Pt, eta3 * weights.eta2 * dPt)
    dEt = dEt + dZt @ params.classifier.weight.T

    transfer_grads = _feature_backward(params, memory_s, dEs)
    target_grads = _feature_backward(params, memory_t, dEt)
    for name in transfer_grads:
        transfer_grads[name] = transfer_grads[name] + target_grads[name]
    transfer_grads["classifier.weight"] = Et.T @ dZt
    transfer_grads["classifier.bias"] = dZt.sum(axis=0)
    return CompositeLoss(source_ce, transfer, eta3, grads + GradientSet(transfer_grads))


def composite_loss_and_grads(
    params, src_mixed, tgt_mixed, plan, src_raw, weights, eta3, label_loss="sce"
):
    """Total composite loss and its :class:`GradientSet`."""
    terms = composite_loss_terms(
        params, src_mixed, tgt_mixed, plan, src_raw, weights, eta3, label_loss
    )
    return terms.total, terms.grads


def finite_difference_check(params, loss_and_grads, h=1e-5):
    """Worst relative error between analytic and central-difference gradients.

    Parameters
    ----------
    params : :class:`MlpParams`
    loss_and_grads : callable
        Maps parameters to ``(loss, GradientSet)``.
    h : float
        Step of ``(L(theta + h) - L(theta - h)) / 2h``.

    Returns
    -------
    float
        ``max |a - n| / max(|a|, |n|, 1e-8)`` over all coordinates.
    """
    _, grads = loss_and_grads(params)
    grads.check_matches(params)
    tensors = {name: array.copy() for name, array in params.tensors().items()}
    worst = 0.0
    for name, array in tensors.items():
        analytic = grads.tensors[name]
        for index in np.ndindex(array.shape):
            original = array[index]
            array[index] = original + h
            plus = loss_and_grads(params.with_tensors(tensors))[0]
            array[index] = original - h
            minus = loss_and_grads(params.with_tensors(tensors))[0]
            array[index] = original
            numeric = (plus - minus) / (2 * h)
            a = analytic[index]
            error = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, error)
    return worst


@dataclass(frozen=True)
class OptimizerConfig:
    """SGD with momentum or Adam.

    Defaults follow the Adam setting of the training recipe: learning rate
    ``2e-4`` and no weight decay.
    """

    method: str = "adam"
    learning_rate: float = 2e-4
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.method not in ("sgd", "adam"):
            msg = f"unknown optimizer {self.method!r}"
            raise ValidationError(msg)
        if not self.learning_rate > 0:
            msg = "learning_rate must be positive"
            raise ValidationError(msg)
        if not (0 <= self.momentum < 1 and 0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            msg = "momentum and beta parameters must lie in [0, 1)"
            raise ValidationError(msg)


@dataclass(frozen=True)
class OptimizerState:
    """Step count and moment buffers, keyed like the parameter tensors."""

    config: OptimizerConfig
    step: int = 0
    first_moment: dict = field(default_factory=dict)
    second_moment: dict = field(default_factory=dict)

    @classmethod
    def initial(cls, params, config=None):
        config = OptimizerConfig() if config is None else config

        def zeros():
            return {name: np.zeros_like(array) for name, array in params.tensors().items()}

        return cls(config, 0, zeros(), {} if config.method == "sgd" else zeros())


def optimizer_step(params, grads, state):
    """One SGD-with-momentum or bias-corrected Adam update.

    Returns
    -------
    tuple
        Updated ``(MlpParams, OptimizerState)``.
    """
    grads.check_matches(params)
    cfg = state.config
    step = state.step + 1
    lr = cfg.learning_rate
    new_params, first, second = {}, {}, {}
    for name, value in params.tensors().items():
        g = grads.tensors[name]
        if cfg.method == "sgd":
            buf = g if state.step == 0 else cfg.momentum * state.first_moment[name] + g
            first[name] = buf
            new_params[name] = value - lr * buf
        else:
            m = cfg.beta1 * state.first_moment[name] + (1 - cfg.beta1) * g
            v = cfg.beta2 * state.second_moment[name] + (1 - cfg.beta2) * g**2
            m_hat = m / (1 - cfg.beta1**step)
            v_hat = v / (1 - cfg.beta2**step)
            first[name], second[name] = m, v
            new_params[name] = value - lr * m_hat / (np.sqrt(v_hat) + cfg.eps)
    return params.with_tensors(new_params), replace(
        state, step=step, first_moment=first, second_moment=second
    )


def checkpoint_document(params):
    """JSON document of the parameters: header, dims and row-major tensors."""
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "dims": list(params.dims),
        "activations": list(params.activations),
        "tensors": {
            name: {"shape": list(array.shape), "data": array.ravel(order="C").tolist()}
            for name, array in params.tensors().items()
        },
    }


def params_from_document(document):
    if document.get("format") != CHECKPOINT_FORMAT:
        msg = f"not an {CHECKPOINT_FORMAT} checkpoint"
        raise ValidationError(msg)
    if document.get("version") != CHECKPOINT_VERSION:
        msg = f"unsupported checkpoint version {document.get('version')!r}"
        raise ValidationError(msg)
    template = init_params(document["dims"], activations=document["activations"])
    tensors = {
        name: np.asarray(entry["data"], dtype=float).reshape(entry["shape"])
        for name, entry in document["tensors"].items()
    }
    params = template.with_tensors(tensors)
    if params.dims != tuple(document["dims"]):
        msg = "checkpoint tensors disagree with its dims"
        raise DimensionError(msg)
    return params


def save_checkpoint(path, params):
    io.write_json(path, checkpoint_document(params))


def load_checkpoint(path):
    return params_from_document(io.read_json(path))


__all__ = [
    "DEFAULT_DIMS",
    "CompositeLoss",
    "DenseLayer",
    "GradientSet",
    "MlpParams",
    "OptimizerConfig",
    "OptimizerState",
    "composite_loss_and_grads",
    "composite_loss_terms",
    "finite_difference_check",
    "forward_classifier",
    "forward_features",
    "init_params",
    "load_checkpoint",
    "optimizer_step",
    "predict",
    "save_checkpoint",
    "source_loss_and_grads",
]
