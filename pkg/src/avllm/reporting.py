"""Report files: machine-readable JSON plus rendered figures.

Figures are written with the Agg backend so report generation works in
headless environments; each plotting helper saves a PNG next to (or at) the
given path and returns that path.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import ModelScoreSummary, TallyReport
from .preference.types import TrainReport

__all__ = [
    "write_json_report",
    "figure_path_for",
    "plot_loss_curve",
    "plot_tally",
    "plot_score_bars",
]


def write_json_report(payload: dict, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path


def figure_path_for(report_path: str | Path) -> Path:
    """Sibling PNG path for a JSON report file."""
    report_path = Path(report_path)
    return report_path.with_suffix(".png")


def plot_loss_curve(report: TrainReport, path: str | Path, title: str = "Training loss") -> Path:
    path = Path(path)
    steps = [step for step, _ in report.loss_trace]
    losses = [loss for _, loss in report.loss_trace]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(steps, losses, lw=1.5)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_tally(tally: TallyReport, path: str | Path, title: str = "Pairwise outcomes") -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5, 4))
    labels = ["win", "lose", "tie"]
    counts = [tally.win, tally.lose, tally.tie]
    ax.bar(labels, counts, color=["#2a9d8f", "#e76f51", "#8d99ae"])
    for i, count in enumerate(counts):
        ax.text(i, count, str(count), ha="center", va="bottom")
    ax.set_ylabel("judgments")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_score_bars(
    summaries: dict[str, ModelScoreSummary], path: str | Path, title: str = "Expert scores"
) -> Path:
    path = Path(path)
    tags = list(summaries)
    dims = ["fluency", "accuracy", "timeliness"]
    fig, ax = plt.subplots(figsize=(max(5, 1.6 * len(tags)), 4))
    width = 0.25
    for offset, dim in enumerate(dims):
        values = [getattr(summaries[t], f"{dim}_mean") for t in tags]
        positions = [i + (offset - 1) * width for i in range(len(tags))]
        ax.bar(positions, values, width=width, label=dim)
    ax.set_xticks(range(len(tags)))
    ax.set_xticklabels(tags, rotation=15, ha="right")
    ax.set_ylim(0, 5)
    ax.set_ylabel("mean score")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
