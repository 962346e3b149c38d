"""Delimited reports and the figures rendered alongside them.

Every report is a TSV file; the plot helpers render the same numbers to
PNG next to it. Matplotlib is imported lazily with the Agg backend so
library users without a display (or without figures to draw) pay nothing.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence


def write_tsv(path: Path, header: Sequence[str], rows: Sequence[Sequence],
              metadata: Sequence[str] = ()) -> None:
    """Tab-separated table with optional '#' metadata lines on top."""
    with open(path, "w", encoding="utf-8") as sink:
        for line in metadata:
            sink.write(f"# {line}\n")
        sink.write("\t".join(header) + "\n")
        for row in rows:
            sink.write("\t".join(_cell(v) for v in row) + "\n")


def _cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def render_tv_curve(checkpoints: Sequence[int], tvs: Sequence[float],
                    path: Path, title: str = "Convergence to the exact target") -> None:
    """Total-variation distance versus chain length, log-x."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(checkpoints, tvs, marker="o")
    ax.set_xscale("log")
    ax.set_xlabel("steps")
    ax.set_ylabel("TV(empirical, exact)")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_corruption_curve(levels: Sequence[float],
                            means: Sequence[float],
                            per_seed: Sequence[Sequence[float]],
                            path: Path) -> None:
    """Final recovery score per corruption level, with per-seed scatter."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for level, scores in zip(levels, per_seed):
        ax.plot([level * 100] * len(scores), scores, "x", color="gray", alpha=0.6)
    ax.plot([lv * 100 for lv in levels], means, marker="o", label="mean")
    ax.set_xlabel("corrupted words (%)")
    ax.set_ylabel("final similarity to original (BLEU)")
    ax.set_title("Warm-start quality under initial-state corruption")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_acceptance_bars(rates: dict[str, float], path: Path) -> None:
    """Per-operation acceptance rates as a bar chart."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4))
    kinds = list(rates)
    values = [rates[k] * 100 for k in kinds]
    ax.bar(kinds, values)
    ax.set_ylabel("acceptance rate (%)")
    ax.set_ylim(0, 105)
    for i, v in enumerate(values):
        ax.text(i, v + 1, f"{v:.1f}", ha="center")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
