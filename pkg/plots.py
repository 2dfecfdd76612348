# -*- coding: utf-8 -*-
"""
그래프 모듈 (SVG)
- 임계값 곡선, 아키텍처 히트맵, 적응 추이, 궤적, 결정 영역 지도
- 설정 해시를 SVG 메타데이터에 기록
"""

import json
import logging
import platform
from typing import Mapping, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.font_manager as fm  # noqa: E402
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from constants import get_plot_color  # noqa: E402
from ha_core import HybridAutomaton, State  # noqa: E402

logger = logging.getLogger(__name__)


def setup_fonts():
    """한글 폰트 설정 (크로스 플랫폼)"""
    if platform.system() == "Windows":
        plt.rcParams["font.family"] = "Malgun Gothic"
    else:
        available = {f.name for f in fm.fontManager.ttflist}
        for name in ("NanumGothic", "Nanum Gothic"):
            if name in available:
                plt.rcParams["font.family"] = name
                break
        else:
            plt.rcParams["font.family"] = "DejaVu Sans"
    plt.rcParams["axes.unicode_minus"] = False
    # SVG 내부 id 고정 (같은 입력 → 같은 파일)
    plt.rcParams["svg.hashsalt"] = "nsc"


def save_svg(fig, path: str, meta: Optional[Mapping] = None, title: str = ""):
    metadata = {"Title": title, "Date": None}
    if meta:
        metadata["Description"] = json.dumps(
            {k: meta[k] for k in ("command", "config_hash", "seed") if k in meta}, sort_keys=True)
    fig.savefig(path, format="svg", bbox_inches="tight", metadata=metadata)
    plt.close(fig)
    logger.info("그래프 저장: %s", path)


def plot_threshold_sweep(sweep: pd.DataFrame, path: str, meta: Optional[Mapping] = None,
                         selected: Optional[float] = None):
    """θ 에 따른 정확도 / FN / FP 비율"""
    setup_fonts()
    fig, ax = plt.subplots(figsize=(8, 5))
    ax.plot(sweep["theta"], sweep["accuracy"], color=get_plot_color("accuracy"), label="정확도")
    ax.plot(sweep["theta"], sweep["fn_rate"], color=get_plot_color("fn"), label="FN 비율")
    ax.plot(sweep["theta"], sweep["fp_rate"], color=get_plot_color("fp"), label="FP 비율")
    if selected is not None:
        ax.axvline(selected, color="#333333", linestyle="--", linewidth=0.8, label=f"θ = {selected:.2f}")
    ax.set_xlabel("임계값 θ")
    ax.set_ylabel("비율")
    ax.set_xlim(0, 1)
    ax.grid(alpha=0.3)
    ax.legend()
    save_svg(fig, path, meta, "threshold sweep")


def plot_arch_heatmap(matrix: pd.DataFrame, path: str, meta: Optional[Mapping] = None,
                      metric: str = "정확도"):
    """은닉층 수(행) × 뉴런 수(열) 정확도 행렬, 실패 칸(NaN)은 비워 둠"""
    setup_fonts()
    values = matrix.to_numpy(dtype=float)
    fig, ax = plt.subplots(figsize=(1.2 * values.shape[1] + 2, 0.9 * values.shape[0] + 1.5))
    im = ax.imshow(np.ma.masked_invalid(values), cmap="viridis", aspect="auto")
    ax.set_xticks(range(values.shape[1]))
    ax.set_xticklabels([str(c) for c in matrix.columns])
    ax.set_yticks(range(values.shape[0]))
    ax.set_yticklabels([str(r) for r in matrix.index])
    ax.set_xlabel("층당 뉴런 수")
    ax.set_ylabel("은닉층 수")
    for i in range(values.shape[0]):
        for j in range(values.shape[1]):
            if np.isfinite(values[i, j]):
                ax.text(j, i, f"{100 * values[i, j]:.2f}", ha="center", va="center", fontsize=7, color="white")
    fig.colorbar(im, ax=ax, label=metric)
    save_svg(fig, path, meta, "architecture sweep")


def plot_adaptation_trace(trace: pd.DataFrame, path: str, meta: Optional[Mapping] = None):
    """반복별 발견 FN 수 (막대)와 테스트 지표 (선)"""
    setup_fonts()
    fig, ax = plt.subplots(figsize=(8, 5))
    ax.bar(trace["iteration"], trace["fn_found"], color=get_plot_color("fn"), alpha=0.6, label="발견한 FN")
    ax.set_xlabel("적응 반복")
    ax.set_ylabel("FN 개수")
    if trace["accuracy"].notna().any():
        ax2 = ax.twinx()
        ax2.plot(trace["iteration"], trace["accuracy"], color=get_plot_color("accuracy"), marker="o", label="정확도")
        ax2.plot(trace["iteration"], trace["fn_rate"], color=get_plot_color("fn"), marker="x", label="FN 비율")
        ax2.plot(trace["iteration"], trace["fp_rate"], color=get_plot_color("fp"), marker="s", label="FP 비율")
        ax2.set_ylabel("비율")
        ax2.legend(loc="upper right")
    ax.legend(loc="upper left")
    ax.grid(alpha=0.3)
    save_svg(fig, path, meta, "adaptation trace")


def plot_trajectory(frame: pd.DataFrame, variables: Sequence[str], path: str,
                    meta: Optional[Mapping] = None, jump_times: Sequence[float] = ()):
    """변수별 시간 응답, 점프 시각은 세로선"""
    setup_fonts()
    fig, axes = plt.subplots(len(variables), 1, figsize=(8, 2.2 * len(variables)), sharex=True, squeeze=False)
    for ax, var in zip(axes[:, 0], variables):
        ax.plot(frame["t"], frame[var], color=get_plot_color("trace"), linewidth=1.0)
        for t in jump_times[1:]:
            ax.axvline(t, color="#999999", linewidth=0.5, linestyle=":")
        ax.set_ylabel(var)
        ax.grid(alpha=0.3)
    axes[-1, 0].set_xlabel("시간")
    save_svg(fig, path, meta, "trajectory")


def plot_decision_map(classifier, ha: HybridAutomaton, x_var: str, y_var: str, path: str,
                      meta: Optional[Mapping] = None, mode: Optional[str] = None,
                      base: Optional[State] = None, fn_states: Sequence[State] = (),
                      fp_states: Sequence[State] = (), resolution: int = 200, theta: Optional[float] = None):
    """
    두 변수 평면에서 분류기가 양성으로 예측하는 영역

    Args:
        base: 나머지 변수/파라미터 값 (없으면 도메인 중심, 기본 파라미터)
        fn_states, fp_states: 겹쳐 그릴 오분류 샘플
    """
    setup_fonts()
    theta = classifier.theta if theta is None else theta
    mode = mode or (base.mode if base is not None else ha.mode_ids[0])
    box = ha.domain(mode)
    ix, iy = ha.variables.index(x_var), ha.variables.index(y_var)
    if base is None:
        base = State(mode, tuple(0.5 * (lo + hi) for lo, hi in box), ha.default_parameters())

    xs = np.linspace(box[ix][0], box[ix][1], resolution)
    ys = np.linspace(box[iy][0], box[iy][1], resolution)
    states = []
    for y in ys:
        for x in xs:
            v = list(base.x)
            v[ix], v[iy] = float(x), float(y)
            states.append(State(mode, tuple(v), base.p))
    positive = (classifier.scores(states) >= theta).reshape(resolution, resolution)

    fig, ax = plt.subplots(figsize=(7, 6))
    ax.contourf(xs, ys, positive.astype(float), levels=[-0.5, 0.5, 1.5],
                colors=[get_plot_color("negative"), get_plot_color("positive")])
    for group, key, marker in ((fn_states, "fn", "x"), (fp_states, "fp", "o")):
        pts = [(s.x[ix], s.x[iy]) for s in group if s.mode == mode]
        if pts:
            arr = np.asarray(pts)
            ax.scatter(arr[:, 0], arr[:, 1], s=12, marker=marker, color=get_plot_color(key), label=key.upper())
    ax.set_xlabel(x_var)
    ax.set_ylabel(y_var)
    ax.set_title(f"{ha.model_id} / {mode}")
    if fn_states or fp_states:
        ax.legend()
    save_svg(fig, path, meta, "decision map")
