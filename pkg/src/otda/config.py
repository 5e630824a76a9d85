#
# Experiment configuration documents
#
from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, replace
from pathlib import Path

from otda.data import GENERATORS, ScenarioConfig
from otda.entry_point import Method, parameter_sets
from otda.exceptions import ConfigError, OTDAError
from otda.losses import LossWeights
from otda.measures import SolverConfig
from otda.mixup import MixupConfig
from otda.model import OptimizerConfig

SEED_OVERRIDE_VARIABLE = "OTDA_SEED_OVERRIDE"

TOP_LEVEL_KEYS = (
    "parameter_set",
    "scenario",
    "method",
    "loss_weights",
    "solver",
    "mixup",
    "batch",
    "train",
    "seeds",
    "output_dir",
    "sweep",
)
SCENARIO_KEYS = (
    "generator",
    "samples_per_class",
    "target_samples_per_class",
    "centers",
    "cluster_std",
    "shift",
    "rotation",
    "dropped_classes",
    "noise",
    "test_samples_per_class",
)
LOSS_KEYS = ("eta1", "eta2", "eta3", "eta4", "eta5", "clip_floor")
SOLVER_KEYS = (
    "kind",
    "epsilon",
    "tau",
    "max_iterations",
    "tolerance",
    "log_domain",
    "scale_epsilon",
    "epsilon_scaling",
)
MIXUP_KEYS = ("alpha", "shared_lambda")
BATCH_KEYS = ("m", "num_draws", "stratified")
TRAIN_KEYS = ("epochs", "pretrain_epochs", "lr", "optimizer", "momentum", "hidden", "embedding")
METHOD_KEYS = ("name", "label_loss", "mixup")
SWEEP_KEYS = ("parameter", "values")
SWEEP_PARAMETERS = ("alpha", "eta4", "eta5", "m")

METHOD_PATTERN = re.compile(r"^\s*([A-Za-z_\-]+)\s*(?:\(\s*([A-Za-z]+)\s*\))?\s*$")
# method obtained by flipping the MixUp switch
MIXUP_TWINS = {"deepjdot": "mixot", "mixot": "deepjdot", "jumbot": "mixunbot", "mixunbot": "jumbot"}


@dataclass(frozen=True)
class BatchConfig:
    m: tuple = (30,)
    num_draws: int = 1
    stratified: bool = True


@dataclass(frozen=True)
class TrainSettings:
    epochs: int = 10
    pretrain_epochs: int = 2
    optimizer: OptimizerConfig = OptimizerConfig()
    hidden: tuple = (32, 32)
    embedding: int = 16


@dataclass(frozen=True)
class SweepConfig:
    """One-dimensional sensitivity grid over ``parameter``."""

    parameter: str
    values: tuple


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment document.

    ``methods`` holds :class:`otda.models.base_method.BaseMethod` instances and
    ``solvers`` one :class:`otda.measures.SolverConfig` per configured solver.
    """

    scenario: ScenarioConfig
    methods: tuple
    weights: LossWeights
    eta3: float
    solvers: tuple
    mixup: MixupConfig
    batch: BatchConfig
    train: TrainSettings
    seeds: tuple
    output_dir: Path
    sweep: SweepConfig | None = None
    parameter_set: str | None = None

    def scenario_for(self, seed):
        """Scenario of the run with ``seed``."""
        return replace(self.scenario, seed=seed)

    def training_solver(self, method):
        """First configured solver usable by ``method``, else one of its kind."""
        for solver in self.solvers:
            if solver.kind == method.solver_kind or (
                method.solver_kind == "exact" and solver.kind == "sinkhorn"
            ):
                return solver
        base = self.solvers[0]
        return replace(base, kind=method.solver_kind)

    def train_config(self, method, seed, m=None, weights=None, mixup=None):
        """:class:`otda.trainer.TrainConfig` of one run, with optional sweep overrides."""
        mixup = self.mixup if mixup is None else mixup
        return method.train_config(
            solver=self.training_solver(method),
            weights=self.weights if weights is None else weights,
            eta3=self.eta3,
            mixup_config=replace(mixup, seed=seed),
            batch_size=self.batch.m[0] if m is None else m,
            stratified=self.batch.stratified,
            epochs=self.train.epochs,
            pretrain_epochs=self.train.pretrain_epochs,
            optimizer=self.train.optimizer,
            hidden=self.train.hidden,
            embedding=self.train.embedding,
            seed=seed,
        )


def _check_keys(section, allowed, path):
    if not isinstance(section, dict):
        raise ConfigError(path or "<root>", "expected an object")
    for key in section:
        if key not in allowed:
            raise ConfigError(_join(path, key), "unknown key")


def _join(path, key):
    return f"{path}.{key}" if path else str(key)


def _number(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(path, f"must be at least {minimum}")
    return float(value)


def _integer(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(path, f"must be at least {minimum}")
    return value


def _boolean(value, path):
    if not isinstance(value, bool):
        raise ConfigError(path, f"expected true or false, got {value!r}")
    return value


def _string(value, path):
    if not isinstance(value, str):
        raise ConfigError(path, f"expected a string, got {value!r}")
    return value


def _list(value, path, item, allow_scalar=False):
    if allow_scalar and not isinstance(value, list):
        value = [value]
    if not isinstance(value, list):
        raise ConfigError(path, f"expected a list, got {value!r}")
    return tuple(item(entry, f"{path}[{i}]") for i, entry in enumerate(value))


def _build(factory, path, **kwargs):
    """Call a validating constructor, reporting its errors at ``path``."""
    try:
        return factory(**kwargs)
    except OTDAError as error:
        raise ConfigError(path, str(error)) from error


def _merge(base, override):
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _scenario(value):
    if isinstance(value, str):
        value = {"generator": value}
    _check_keys(value, SCENARIO_KEYS, "scenario")
    generator = _string(value.get("generator", "blobs"), "scenario.generator")
    if generator not in GENERATORS:
        raise ConfigError("scenario.generator", f"expected one of {GENERATORS}")
    default_counts = {"moons": [100, 100], "clusters": [4, 4, 4]}.get(generator, [100, 100, 100])
    kwargs = {"generator": generator}

    def counts(key):
        return _list(value[key], f"scenario.{key}", lambda v, p: _integer(v, p, 0))

    kwargs["samples_per_class"] = counts("samples_per_class") if "samples_per_class" in value else tuple(default_counts)
    for key in ("target_samples_per_class", "test_samples_per_class", "dropped_classes"):
        if key in value:
            kwargs[key] = counts(key)
    for key in ("cluster_std", "rotation", "noise"):
        if key in value:
            kwargs[key] = _number(value[key], f"scenario.{key}")
    if "shift" in value:
        kwargs["shift"] = _list(value["shift"], "scenario.shift", _number)
    if "centers" in value:
        kwargs["centers"] = _list(
            value["centers"], "scenario.centers", lambda v, p: _list(v, p, _number)
        )
    return _build(ScenarioConfig, "scenario", **kwargs)


def _method(value, path):
    mixup = None
    if isinstance(value, dict):
        _check_keys(value, METHOD_KEYS, path)
        if "name" not in value:
            raise ConfigError(_join(path, "name"), "missing required key")
        name = _string(value["name"], _join(path, "name"))
        label_loss = value.get("label_loss")
        if label_loss is not None:
            label_loss = _string(label_loss, _join(path, "label_loss"))
        if "mixup" in value:
            mixup = _boolean(value["mixup"], _join(path, "mixup"))
    else:
        match = METHOD_PATTERN.match(_string(value, path))
        if match is None:
            raise ConfigError(path, f"cannot parse method {value!r}")
        name, label_loss = match.groups()
    try:
        method = Method(name, label_loss=label_loss)
        if mixup is not None and mixup != method.mixup:
            if method.key not in MIXUP_TWINS:
                raise ConfigError(_join(path, "mixup"), f"{method.key} has no MixUp switch")
            method = Method(MIXUP_TWINS[method.key], label_loss=label_loss or method.label_loss)
    except KeyError as error:
        raise ConfigError(path, str(error.args[0])) from error
    except OTDAError as error:
        if isinstance(error, ConfigError):
            raise
        raise ConfigError(path, str(error)) from error
    return method


def _methods(value):
    methods = _list(value, "method", _method, allow_scalar=True)
    if not methods:
        raise ConfigError("method", "must name at least one method")
    variants = [method.variant for method in methods]
    duplicates = sorted({v for v in variants if variants.count(v) > 1})
    if duplicates:
        raise ConfigError("method", f"duplicate variants {duplicates}")
    return methods


def _loss_weights(value):
    _check_keys(value, LOSS_KEYS, "loss_weights")
    numbers = {key: _number(v, f"loss_weights.{key}") for key, v in value.items()}
    eta3 = numbers.pop("eta3", 1.0)
    if eta3 < 0:
        raise ConfigError("loss_weights.eta3", "must be nonnegative")
    return _build(LossWeights, "loss_weights", **numbers), eta3


def _solver(value, path):
    _check_keys(value, SOLVER_KEYS, path)
    kwargs = {}
    for key, entry in value.items():
        key_path = _join(path, key)
        if key == "kind":
            kwargs[key] = _string(entry, key_path)
        elif key == "max_iterations":
            kwargs[key] = _integer(entry, key_path, 1)
        elif key in ("log_domain", "scale_epsilon", "epsilon_scaling"):
            kwargs[key] = _boolean(entry, key_path)
        else:
            kwargs[key] = _number(entry, key_path)
    if kwargs.get("tau", 1.0) <= 0:
        raise ConfigError(_join(path, "tau"), "must be positive")
    if kwargs.get("kind") in ("sinkhorn", "unbalanced") and kwargs.get("epsilon", 0.1) <= 0:
        raise ConfigError(_join(path, "epsilon"), "must be positive for entropic solvers")
    return _build(SolverConfig, path, **kwargs)


def _solvers(value):
    if isinstance(value, list):
        solvers = tuple(_solver(entry, f"solver[{i}]") for i, entry in enumerate(value))
    else:
        solvers = (_solver(value, "solver"),)
    if not solvers:
        raise ConfigError("solver", "must configure at least one solver")
    return solvers


def _mixup(value):
    _check_keys(value, MIXUP_KEYS, "mixup")
    kwargs = {}
    if "alpha" in value:
        kwargs["alpha"] = _number(value["alpha"], "mixup.alpha")
    if "shared_lambda" in value:
        kwargs["shared_lambda"] = _boolean(value["shared_lambda"], "mixup.shared_lambda")
    return _build(MixupConfig, "mixup", **kwargs)


def _batch(value):
    _check_keys(value, BATCH_KEYS, "batch")
    kwargs = {}
    if "m" in value:
        kwargs["m"] = _list(value["m"], "batch.m", lambda v, p: _integer(v, p, 1), allow_scalar=True)
        if not kwargs["m"]:
            raise ConfigError("batch.m", "must list at least one batch size")
    if "num_draws" in value:
        kwargs["num_draws"] = _integer(value["num_draws"], "batch.num_draws", 1)
    if "stratified" in value:
        kwargs["stratified"] = _boolean(value["stratified"], "batch.stratified")
    return BatchConfig(**kwargs)


def _train(value):
    _check_keys(value, TRAIN_KEYS, "train")
    kwargs = {}
    for key in ("epochs", "pretrain_epochs"):
        if key in value:
            kwargs[key] = _integer(value[key], f"train.{key}", 0)
    if "embedding" in value:
        kwargs["embedding"] = _integer(value["embedding"], "train.embedding", 1)
    if "hidden" in value:
        kwargs["hidden"] = _list(value["hidden"], "train.hidden", lambda v, p: _integer(v, p, 1))
    optimizer = {}
    if "lr" in value:
        optimizer["learning_rate"] = _number(value["lr"], "train.lr")
    if "optimizer" in value:
        optimizer["method"] = _string(value["optimizer"], "train.optimizer")
    if "momentum" in value:
        optimizer["momentum"] = _number(value["momentum"], "train.momentum")
    kwargs["optimizer"] = _build(OptimizerConfig, "train", **optimizer)
    return TrainSettings(**kwargs)


def _seeds(value):
    override = os.environ.get(SEED_OVERRIDE_VARIABLE)
    if override is not None:
        try:
            seeds = tuple(int(s) for s in override.split(",") if s.strip())
        except ValueError as error:
            raise ConfigError(SEED_OVERRIDE_VARIABLE, "expected comma-separated integers") from error
        path = SEED_OVERRIDE_VARIABLE
    else:
        seeds = _list(value, "seeds", lambda v, p: _integer(v, p, 0))
        path = "seeds"
    if not seeds:
        raise ConfigError(path, "must list at least one seed")
    if len(set(seeds)) != len(seeds):
        raise ConfigError(path, "seeds must be distinct")
    return seeds


def _sweep(value):
    _check_keys(value, SWEEP_KEYS, "sweep")
    for key in SWEEP_KEYS:
        if key not in value:
            raise ConfigError(f"sweep.{key}", "missing required key")
    parameter = _string(value["parameter"], "sweep.parameter")
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError("sweep.parameter", f"expected one of {SWEEP_PARAMETERS}")
    if parameter == "m":
        values = _list(value["values"], "sweep.values", lambda v, p: _integer(v, p, 1))
    else:
        values = _list(value["values"], "sweep.values", lambda v, p: _number(v, p, 0))
    if not values:
        raise ConfigError("sweep.values", "must list at least one value")
    return SweepConfig(parameter, values)


def parse_config(document, output_dir=None):
    """Validate an experiment document and build an :class:`ExperimentConfig`.

    Parameters
    ----------
    document : dict
        Parsed JSON. When ``parameter_set`` names a preset, its values form
        the base document and the remaining keys override them.
    output_dir : str or path, optional
        Overrides ``output_dir`` of the document.

    Raises
    ------
    :class:`otda.exceptions.ConfigError`
        With the dotted path of the first invalid field.
    """
    _check_keys(document, TOP_LEVEL_KEYS, "")
    preset = document.get("parameter_set")
    if preset is not None:
        preset = _string(preset, "parameter_set")
        try:
            base = parameter_sets[parameter_sets.resolve(preset)]
        except KeyError as error:
            raise ConfigError("parameter_set", str(error.args[0])) from error
        document = _merge(base, {k: v for k, v in document.items() if k != "parameter_set"})
        _check_keys(document, TOP_LEVEL_KEYS, "")

    if output_dir is None:
        if "output_dir" not in document:
            raise ConfigError("output_dir", "missing required key")
        output_dir = _string(document["output_dir"], "output_dir")
    weights, eta3 = _loss_weights(document.get("loss_weights", {}))
    return ExperimentConfig(
        scenario=_scenario(document.get("scenario", "blobs")),
        methods=_methods(document.get("method", "mixunbot")),
        weights=weights,
        eta3=eta3,
        solvers=_solvers(document.get("solver", {"kind": "exact"})),
        mixup=_mixup(document.get("mixup", {})),
        batch=_batch(document.get("batch", {})),
        train=_train(document.get("train", {})),
        seeds=_seeds(document.get("seeds", [0])),
        output_dir=Path(output_dir),
        sweep=_sweep(document["sweep"]) if "sweep" in document else None,
        parameter_set=preset,
    )


def load_config(path, output_dir=None):
    """Read and validate the JSON experiment document at ``path``."""
    with Path(path).open(encoding="utf-8") as handle:
        try:
            document = json.load(handle)
        except json.JSONDecodeError as error:
            raise ConfigError("<root>", f"invalid JSON: {error}") from error
    return parse_config(document, output_dir=output_dir)
