import numpy as np
import pytest

from otda import plotting
from otda.data import LabeledDataset, gen_clusters_scenario
from otda.exceptions import DimensionError


def test_segment_alphas():
    alphas = plotting.segment_alphas([[0.5, 0.25], [1e-9, 0.0]])
    np.testing.assert_allclose(alphas, [[1.0, 0.5], [0.0, 0.0]])
    np.testing.assert_array_equal(plotting.segment_alphas(np.zeros((2, 2))), np.zeros((2, 2)))


def test_plans_svg_is_byte_stable():
    source, target = gen_clusters_scenario(0)
    coupling = np.full((12, 12), 1 / 144)
    panels = [("uniform", coupling), ("diagonal", np.eye(12) / 12)]
    first = plotting.plans_svg(panels, source, target, columns=2)
    second = plotting.plans_svg(panels, source, target, columns=2)
    assert first == second
    assert first.lstrip().startswith("<?xml")
    assert "<svg" in first
    assert "dc:date" not in first


def test_save_plans_svg(tmp_path):
    source, target = gen_clusters_scenario(1)
    path = tmp_path / "plans.svg"
    plotting.save_plans_svg(path, [("zero", np.zeros((12, 12)))], source, target)
    assert path.read_text().count("<svg") == 1


def test_draw_plan_checks_shapes():
    from matplotlib.figure import Figure

    source, target = gen_clusters_scenario(2)
    ax = Figure().add_subplot()
    with pytest.raises(DimensionError):
        plotting.draw_plan(ax, source, target, np.zeros((3, 3)))
    flat = LabeledDataset(np.zeros((12, 3)), source.labels, 3)
    with pytest.raises(DimensionError):
        plotting.draw_plan(ax, flat, flat, np.zeros((12, 12)))
