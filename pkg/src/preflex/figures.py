"""Matplotlib rendering for reports: Pareto scatters and per-condition boxplots.

All functions write PNG files and return the path; the Agg backend keeps them
headless-safe.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .objectives import OBJECTIVE_LABELS, Objective

_LAYER_STYLE = [
    dict(color="tab:blue", marker="o"),
    dict(color="tab:green", marker="s"),
    dict(color="tab:purple", marker="x"),
    dict(color="tab:orange", marker="^"),
    dict(color="tab:brown", marker="v"),
]


def _axis_label(j: int) -> str:
    return OBJECTIVE_LABELS[Objective(j)]


def save_pareto_scatter(path: str | Path,
                        layers: Sequence[tuple[str, np.ndarray, int | None]],
                        pair: tuple[int, int],
                        reference: Sequence[float] | None = None) -> Path:
    """Scatter archive objective vectors projected onto one objective pair.

    ``layers`` is a sequence of (label, (m, K) objectives, chosen index or
    None); chosen candidates are circled, the reference point is drawn as '+'.
    """
    jx, jy = pair
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    for layer, style in zip(layers, _LAYER_STYLE * (1 + len(layers) // len(_LAYER_STYLE))):
        label, objs, chosen = layer
        objs = np.asarray(objs)
        ax.scatter(objs[:, jx], objs[:, jy], s=18, alpha=0.65, label=label, **style)
        if chosen is not None:
            ax.scatter([objs[chosen, jx]], [objs[chosen, jy]], s=160, facecolors="none",
                       edgecolors=style["color"], linewidths=1.8)
    if reference is not None:
        ax.scatter([reference[jx]], [reference[jy]], marker="+", s=140, c="red",
                   linewidths=2.0, label="reference")
    ax.set_xlabel(_axis_label(jx))
    ax.set_ylabel(_axis_label(jy))
    ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_condition_boxplot(path: str | Path, rows: Sequence[Mapping], metric: str,
                           title: str | None = None) -> Path:
    """Boxplot of one row metric grouped by condition (NaN entries dropped)."""
    groups: dict[str, list[float]] = {}
    for row in rows:
        value = float(row[metric])
        if not math.isnan(value):
            groups.setdefault(str(row["condition"]), []).append(value)
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    labels = sorted(groups)
    ax.boxplot([groups[c] for c in labels], tick_labels=labels)
    ax.set_ylabel(metric)
    ax.set_title(title or metric)
    ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_hypervolume_curve(path: str | Path,
                           curves: Sequence[tuple[str, Sequence[float]]]) -> Path:
    """Per-generation hypervolume progression for one or more runs."""
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for label, values in curves:
        ax.plot(range(len(values)), values, label=label)
    ax.set_xlabel("generation")
    ax.set_ylabel("cumulative hypervolume")
    ax.legend(loc="lower right", fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
