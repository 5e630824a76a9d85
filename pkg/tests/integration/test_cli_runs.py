import json

import pytest

import otda
from otda import cli, io
from otda.config import SEED_OVERRIDE_VARIABLE, parse_config


def _preset_file(tmp_path, name, **overrides):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps({"parameter_set": name, **overrides}))
    return str(path)


@pytest.mark.parametrize("name", sorted(otda.parameter_sets))
def test_presets_parse(name):
    config = parse_config({"parameter_set": name}, output_dir="out")
    assert config.parameter_set == name
    assert config.methods


def test_three_clusters_plans_are_reproducible(tmp_path, monkeypatch):
    monkeypatch.setenv(SEED_OVERRIDE_VARIABLE, "0,1")
    config = _preset_file(tmp_path, "ThreeClusters", batch={"m": [2, 4, 12], "num_draws": 50})
    assert cli.main(["plans", "--config", config, "--out", str(tmp_path / "a")]) == cli.EXIT_OK
    assert cli.main(["plans", "--config", config, "--out", str(tmp_path / "b"), "--jobs", "2"]) == 0
    for name in ("plans.csv", "plans.svg", "datasets.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rows = io.read_csv(tmp_path / "a" / "plans.csv")
    assert len(rows) == 2 * 2 * 3
    for row in rows:
        if row["solver"] == "exact" and row["m"] == "12":
            assert float(row["cross_class_fraction"]) == pytest.approx(
                float(row["class_shift_floor"]), abs=1e-9
            )


def test_training_is_reproducible(tmp_path):
    document = {
        "scenario": {"generator": "moons", "samples_per_class": [40, 40], "rotation": 20.0},
        "method": ["source_only", "deepjdot", "mixunbot"],
        "solver": [{"kind": "exact"}, {"kind": "unbalanced", "epsilon": 0.1, "tau": 1.0}],
        "batch": {"m": 16},
        "train": {"epochs": 2, "pretrain_epochs": 1, "hidden": [8], "embedding": 4, "lr": 2e-3},
        "seeds": [0, 1],
    }
    path = tmp_path / "train.json"
    path.write_text(json.dumps(document))
    assert cli.main(["train", "--config", str(path), "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["train", "--config", str(path), "--out", str(tmp_path / "b"), "--jobs", "2"]) == 0
    for name in ("summary.json", "history.csv", "epochs.csv", "checkpoints/mixunbot_seed1.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    summary = io.read_json(tmp_path / "a" / "summary.json")
    assert [row["method"] for row in summary["rows"]] == ["source_only", "deepjdot", "mixunbot"]


@pytest.mark.parametrize("kind", ["solver-oracle", "mixture-bound", "clusters"])
def test_check_kinds_pass_from_the_command_line(tmp_path, kind):
    config = _preset_file(tmp_path, "ThreeClusters", seeds=[0, 1], batch={"num_draws": 200})
    assert cli.main(["check", "--config", config, "--kind", kind, "--out", str(tmp_path)]) == cli.EXIT_OK
    assert io.read_json(tmp_path / f"check_{kind}.json")["passed"] is True
