#
# Experiment drivers behind the command-line interface
#
from __future__ import annotations

import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from itertools import repeat

import numpy as np
import pybamm

from otda import checks, io, plotting
from otda.data import balanced_transport_ceiling, generate_scenario
from otda.exceptions import ConfigError
from otda.logger import logger
from otda.measures import CostMatrix
from otda.minibatch import MinibatchSpec, aggregate_plan, cross_class_mass
from otda.model import checkpoint_document
from otda.trainer import fit

SUMMARY_SCHEMA = "otda.summary"
SWEEP_SCHEMA = "otda.sweep"
SCHEMA_VERSION = 1
# batch size of the minibatch plans compared by the clusters check
CLUSTERS_BATCH = 4
# solver kinds whose plans keep both marginals
BALANCED_KINDS = ("exact", "sinkhorn")

PLAN_FIELDS = [
    "seed",
    "m",
    "solver",
    "tau",
    "epsilon",
    "total_mass",
    "cross_class_fraction",
    "num_connections",
    "raw_mass",
    "class_shift_floor",
]
HISTORY_FIELDS = [
    "method",
    "seed",
    "phase",
    "epoch",
    "step",
    "source_ce",
    "transfer",
    "plan_mass",
    "cross_class_fraction",
]
SWEEP_FIELDS = ["parameter", "value", "method", "seed", "accuracy", "oracle_accuracy"]


def map_seeds(worker, config, jobs=1):
    """``worker(config, seed)`` for every configured seed, in seed order.

    With ``jobs > 1`` the seeds run in a process pool of that size.
    """
    if jobs < 1:
        msg = "jobs must be at least 1"
        raise ConfigError("--jobs", msg)
    if jobs == 1 or len(config.seeds) == 1:
        return [worker(config, seed) for seed in config.seeds]
    with ProcessPoolExecutor(max_workers=min(jobs, len(config.seeds))) as pool:
        return list(pool.map(worker, repeat(config), config.seeds))


def slug(name):
    """File-name form of a method variant, e.g. ``deepjdot-sce``."""
    return re.sub(r"[^A-Za-z0-9_]+", "-", name).strip("-")


def _json_float(value):
    value = float(value)
    return None if np.isnan(value) else value


def solver_labels(solvers):
    """Distinct labels of the configured solvers: the kind, numbered on repeats."""
    kinds = [solver.kind for solver in solvers]
    return [
        kind if kinds.count(kind) == 1 else f"{kind}{kinds[:i].count(kind)}"
        for i, kind in enumerate(kinds)
    ]


def dataset_rows(seed, scenario):
    splits = ("source", "target", "test")
    datasets = (scenario.source, scenario.target, scenario.target_test)
    for split, ds in zip(splits, datasets):
        if ds is None:
            continue
        for row in ds.rows():
            yield {**row, "seed": seed, "split": split}


def _write_datasets(path, results):
    rows = [row for result in results for row in result["datasets"]]
    dim = sum(key.startswith("x") for key in rows[0])
    fields = [f"x{i}" for i in range(dim)] + ["label", "domain", "split", "seed"]
    io.write_csv(path, rows, fields)


#
# plans
#


def _plans_worker(config, seed):
    scenario = generate_scenario(config.scenario_for(seed))
    source, target = scenario.source, scenario.target
    src, tgt = source.to_measure(), target.to_measure()
    cost = CostMatrix.sqeuclidean(src.points, tgt.points)
    rows, plans = [], []
    for label, solver in zip(solver_labels(config.solvers), config.solvers):
        for m in config.batch.m:
            spec = MinibatchSpec(
                m=m, k=config.batch.num_draws, seed=seed, stratified_source=config.batch.stratified
            )
            plan = aggregate_plan(src, tgt, cost, solver.kind, solver, spec)
            diagnostics = cross_class_mass(plan, source.labels, target.labels, spec.k)
            rows.append(
                diagnostics.as_row(
                    seed=seed, m=m, solver=label, tau=solver.tau, epsilon=solver.epsilon
                )
            )
            plans.append((label, m, plan.coupling))
    return {
        "seed": seed,
        "rows": rows,
        "plans": plans,
        "scenario": scenario,
        "datasets": list(dataset_rows(seed, scenario)),
    }


def run_plans(config, jobs=1):
    """Aggregated minibatch plans for every solver, batch size and seed.

    Writes ``plans.csv``, one matrix per plan under ``plans/``, the panels of
    the first seed to ``plans.svg`` and the generated points to
    ``datasets.csv``.

    Returns
    -------
    list of dict
        Rows of ``plans.csv``.
    """
    timer = pybamm.Timer()
    out = config.output_dir
    results = map_seeds(_plans_worker, config, jobs)
    rows = [row for result in results for row in result["rows"]]
    io.write_csv(out / "plans.csv", rows, PLAN_FIELDS)
    for result in results:
        for label, m, coupling in result["plans"]:
            io.write_matrix_csv(out / "plans" / f"{label}_m{m}_seed{result['seed']}.csv", coupling)
    first = results[0]
    panels = [(f"{label}, m={m}", coupling) for label, m, coupling in first["plans"]]
    scenario = first["scenario"]
    if scenario.source.dim == 2:
        plotting.save_plans_svg(
            out / "plans.svg", panels, scenario.source, scenario.target, len(config.batch.m)
        )
    _write_datasets(out / "datasets.csv", results)
    logger.info(f"plans: {len(rows)} plans written to {out} in {timer.time()}")
    return rows


#
# train
#


def _train_worker(config, seed):
    scenario = generate_scenario(config.scenario_for(seed))
    runs = []
    for method in config.methods:
        cfg = config.train_config(method, seed)
        params, history = fit(cfg, scenario.source, scenario.target, scenario.target_test)
        runs.append(
            {
                "variant": method.variant,
                "checkpoint": checkpoint_document(params),
                "history": history,
            }
        )
    return {"seed": seed, "runs": runs, "datasets": list(dataset_rows(seed, scenario))}


def summary_rows(config, results):
    """One summary row per method variant, seeds reduced in configured order."""
    rows = []
    for index, method in enumerate(config.methods):
        histories = [(result["seed"], result["runs"][index]["history"]) for result in results]
        accuracies = np.array([history.final_accuracy for _, history in histories])
        oracles = np.array([history.oracle_accuracy for _, history in histories])
        rows.append(
            {
                "method": method.variant,
                "label_loss": method.label_loss,
                "mixup": method.mixup,
                "seeds": [int(seed) for seed, _ in histories],
                "accuracy_mean": float(accuracies.mean()),
                "accuracy_std": float(accuracies.std()),
                "oracle_mean": float(oracles.mean()),
                "per_seed": [
                    {
                        "seed": int(seed),
                        "accuracy": float(history.final_accuracy),
                        "oracle_accuracy": float(history.oracle_accuracy),
                        "per_class": [_json_float(acc) for acc in history.final_per_class],
                    }
                    for seed, history in histories
                ],
            }
        )
    return rows


def train_results(config, jobs=1):
    timer = pybamm.Timer()
    results = map_seeds(_train_worker, config, jobs)
    logger.info(
        f"train: {len(config.methods)} methods x {len(config.seeds)} seeds in {timer.time()}"
    )
    return results


def run_train(config, jobs=1):
    """Train every method variant on every seed.

    Writes ``history.csv``, ``epochs.csv``, ``summary.json``,
    ``datasets.csv`` and one checkpoint per run under ``checkpoints/``.

    Returns
    -------
    list of dict
        Rows of ``summary.json``.
    """
    out = config.output_dir
    results = train_results(config, jobs)
    steps, epochs = [], []
    for result in results:
        for run in result["runs"]:
            history = run["history"]
            steps.extend(history.step_rows(run["variant"], result["seed"]))
            epochs.extend(history.epoch_rows(run["variant"], result["seed"]))
            io.write_json(
                out / "checkpoints" / f"{slug(run['variant'])}_seed{result['seed']}.json",
                run["checkpoint"],
            )
    class_count = config.scenario.class_count
    io.write_csv(out / "history.csv", steps, HISTORY_FIELDS)
    io.write_csv(
        out / "epochs.csv",
        epochs,
        ["method", "seed", "epoch", "accuracy"] + [f"class_{k}" for k in range(class_count)],
    )
    rows = summary_rows(config, results)
    io.write_json(
        out / "summary.json", {"schema": SUMMARY_SCHEMA, "version": SCHEMA_VERSION, "rows": rows}
    )
    _write_datasets(out / "datasets.csv", results)
    for row in rows:
        logger.info(
            f"{row['method']}: accuracy {row['accuracy_mean']:.4f} +- {row['accuracy_std']:.4f}"
        )
    return rows


#
# sweep
#


def sweep_overrides(config, value):
    """``train_config`` keyword overrides for one value of the swept parameter."""
    parameter = config.sweep.parameter
    if parameter == "alpha":
        return {"mixup": replace(config.mixup, alpha=float(value))}
    if parameter == "m":
        return {"m": int(value)}
    return {"weights": replace(config.weights, **{parameter: float(value)})}


def _sweep_worker(config, seed):
    scenario = generate_scenario(config.scenario_for(seed))
    rows = []
    for value in config.sweep.values:
        overrides = sweep_overrides(config, value)
        for method in config.methods:
            cfg = config.train_config(method, seed, **overrides)
            _, history = fit(cfg, scenario.source, scenario.target, scenario.target_test)
            rows.append(
                {
                    "parameter": config.sweep.parameter,
                    "value": value,
                    "method": method.variant,
                    "seed": seed,
                    "accuracy": history.final_accuracy,
                    "oracle_accuracy": history.oracle_accuracy,
                }
            )
    return rows


def run_sweep(config, jobs=1):
    """Final target accuracy over the grid of ``config.sweep``.

    Writes ``sweep.csv`` (one row per value, method and seed) and
    ``sweep.json`` (means and deviations across seeds).
    """
    if config.sweep is None:
        raise ConfigError("sweep", "missing required key")
    timer = pybamm.Timer()
    out = config.output_dir
    per_seed = map_seeds(_sweep_worker, config, jobs)
    rows = [row for result in per_seed for row in result]
    io.write_csv(out / "sweep.csv", rows, SWEEP_FIELDS)
    summary = []
    for value in config.sweep.values:
        for method in config.methods:
            scores = np.array(
                [
                    row["accuracy"]
                    for row in rows
                    if row["value"] == value and row["method"] == method.variant
                ]
            )
            summary.append(
                {
                    "value": value,
                    "method": method.variant,
                    "accuracy_mean": float(scores.mean()),
                    "accuracy_std": float(scores.std()),
                }
            )
    io.write_json(
        out / "sweep.json",
        {
            "schema": SWEEP_SCHEMA,
            "version": SCHEMA_VERSION,
            "parameter": config.sweep.parameter,
            "rows": summary,
        },
    )
    logger.info(f"sweep over {config.sweep.parameter}: {len(rows)} runs in {timer.time()}")
    return summary


#
# check
#


def ablation_report(config, jobs=1):
    """Train the method grid and check its accuracy margins.

    Variants with a transfer term and a balanced solver are held to the
    class-overlap ceiling of the scenario.
    """
    ceiling = balanced_transport_ceiling(config.scenario, config.batch.stratified)
    capped = [
        method.variant
        for method in config.methods
        if method.transfer and config.training_solver(method).kind in BALANCED_KINDS
    ]
    rows = summary_rows(config, train_results(config, jobs))
    return checks.ablation_checks(rows, ceiling=ceiling, capped=capped)


def check_report(kind, config, jobs=1):
    """Run the verification suite ``kind`` and return its report."""
    kind = checks.CHECK_ALIASES.get(kind, kind)
    if kind == "gradcheck":
        return checks.gradcheck_suite()
    if kind == "mixture-bound":
        return checks.mixture_bound_suite(alpha=config.mixup.alpha)
    if kind == "solver-oracle":
        return checks.solver_oracle_suite()
    if kind == "entropic":
        return checks.entropic_suite()
    if kind == "jensen":
        return checks.jensen_suite()
    if kind == "clusters":
        return checks.clusters_suite(config.seeds, CLUSTERS_BATCH, config.batch.num_draws)
    if kind == "ablation":
        return ablation_report(config, jobs)
    raise ConfigError("--kind", f"unknown check {kind!r}, expected one of {checks.CHECK_KINDS}")


def run_check(kind, config, jobs=1):
    """Run a verification suite and write ``check_<kind>.json``.

    Aliases in :data:`otda.checks.CHECK_ALIASES` resolve to their suite,
    and the report is written under the suite name.

    Raises
    ------
    :class:`otda.exceptions.CheckFailure`
        After the report is written, when any check failed.
    """
    timer = pybamm.Timer()
    kind = checks.CHECK_ALIASES.get(kind, kind)
    report = check_report(kind, config, jobs)
    io.write_json(config.output_dir / f"check_{kind}.json", report.as_document())
    status = "passed" if report.passed else "FAILED"
    logger.info(f"check {kind}: {len(report.checks)} checks {status} in {timer.time()}")
    report.raise_for_failure()
    return report
