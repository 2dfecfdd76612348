# -*- coding: utf-8 -*-
import numpy as np
import pandas as pd

from constants import PLOT_COLORS, DEFAULT_PLOT_COLOR, get_plot_color
from ha_core import model_from_dict
from plots import plot_adaptation_trace, plot_arch_heatmap, plot_decision_map, plot_threshold_sweep

PLANE = model_from_dict({
    "id": "plane",
    "variables": ["x", "y"],
    "modes": [{"id": "a", "flow": {"x": "1", "y": "0"}}],
    "unsafe": "x >= 2",
    "domain": {"x": [0, 2], "y": [-1, 1]},
    "T": 1,
})


class Ramp:
    """x / 2 를 점수로 쓰는 분류기"""
    theta = 0.5

    def scores(self, states):
        return np.array([s.x[0] / 2 for s in states])


def _svg(path):
    text = path.read_text(encoding="utf-8")
    assert text.lstrip().startswith("<?xml")
    assert "</svg>" in text
    return text


def test_plot_color_lookup():
    assert get_plot_color("fn") == PLOT_COLORS["fn"]
    assert get_plot_color("unknown") == DEFAULT_PLOT_COLOR


def test_threshold_sweep_svg_carries_meta(tmp_path):
    grid = np.linspace(0.1, 0.9, 9)
    sweep = pd.DataFrame({"theta": grid, "accuracy": 1 - grid / 2, "fn_rate": grid / 4, "fp_rate": (1 - grid) / 4})
    path = tmp_path / "sweep.svg"
    plot_threshold_sweep(sweep, str(path), {"command": "sweep-threshold", "config_hash": "abc123", "seed": 4},
                         selected=0.3)
    assert "abc123" in _svg(path)


def test_threshold_sweep_svg_is_reproducible(tmp_path):
    sweep = pd.DataFrame({"theta": [0.25, 0.5, 0.75], "accuracy": [0.9, 0.95, 0.9],
                          "fn_rate": [0.0, 0.01, 0.05], "fp_rate": [0.1, 0.04, 0.05]})
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    plot_threshold_sweep(sweep, str(a))
    plot_threshold_sweep(sweep, str(b))
    assert a.read_bytes() == b.read_bytes()


def test_arch_heatmap_allows_failed_cells(tmp_path):
    matrix = pd.DataFrame([[0.9, np.nan], [0.95, 0.97]], index=pd.Index([1, 2], name="layers"),
                          columns=pd.Index([5, 10], name="neurons"))
    path = tmp_path / "arch.svg"
    plot_arch_heatmap(matrix, str(path))
    _svg(path)


def test_adaptation_trace_with_and_without_metrics(tmp_path):
    trace = pd.DataFrame({"iteration": [1, 2], "fn_found": [4, 0], "accuracy": [0.9, 0.95],
                          "fn_rate": [0.02, 0.0], "fp_rate": [0.08, 0.05]})
    plot_adaptation_trace(trace, str(tmp_path / "t.svg"))
    _svg(tmp_path / "t.svg")

    bare = trace.assign(accuracy=np.nan, fn_rate=np.nan, fp_rate=np.nan)
    plot_adaptation_trace(bare, str(tmp_path / "bare.svg"))
    _svg(tmp_path / "bare.svg")


def test_decision_map(tmp_path):
    fn = [PLANE.make_state("a", [1.5, 0.0])]
    path = tmp_path / "map.svg"
    plot_decision_map(Ramp(), PLANE, "x", "y", str(path), fn_states=fn, resolution=20)
    _svg(path)
