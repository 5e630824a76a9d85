import json

import pytest

from otda import cli, io

ABLATION_CHECKS = {
    "mixot over ablated variants",
    "mixunbot over mixot",
    "deepjdot over source_only",
    "deepjdot(sce) over source_only",
    "mixot(ce) over source_only",
    "mixot over source_only",
    "jumbot over source_only",
    "mixunbot over source_only",
}
BALANCED = {"deepjdot", "deepjdot(sce)", "mixot(ce)", "mixot"}


def _preset_file(tmp_path, **overrides):
    path = tmp_path / "label_shift.json"
    path.write_text(json.dumps({"parameter_set": "LabelShiftBlobs", **overrides}))
    return str(path)


def test_ablation_check_runs_the_whole_grid(tmp_path):
    config = _preset_file(
        tmp_path,
        seeds=[0],
        train={"epochs": 2, "pretrain_epochs": 1, "hidden": [8], "embedding": 4},
    )
    out = tmp_path / "out"
    code = cli.main(["check", "--config", config, "--kind", "ablation", "--out", str(out)])
    assert code in (cli.EXIT_OK, cli.EXIT_CHECK)
    report = io.read_json(out / "check_ablation.json")
    assert report["kind"] == "ablation"
    assert report["passed"] is (code == cli.EXIT_OK)
    checks = {check["name"]: check for check in report["checks"]}
    assert set(checks) == ABLATION_CHECKS
    for name, check in checks.items():
        method = name.removesuffix(" over source_only")
        if method in BALANCED:
            assert check["threshold"] <= 0.05
        elif method in ("jumbot", "mixunbot"):
            assert check["threshold"] == pytest.approx(0.05)


@pytest.mark.slow
def test_mixunbot_beats_source_only_under_label_shift(tmp_path):
    config = _preset_file(tmp_path, method=["source_only", "mixunbot"])
    out = tmp_path / "out"
    assert cli.main(["train", "--config", config, "--out", str(out), "--jobs", "2"]) == cli.EXIT_OK
    rows = {row["method"]: row for row in io.read_json(out / "summary.json")["rows"]}
    assert rows["mixunbot"]["seeds"] == [0, 1, 2, 3, 4]
    assert rows["mixunbot"]["accuracy_mean"] >= rows["source_only"]["accuracy_mean"] + 0.05
