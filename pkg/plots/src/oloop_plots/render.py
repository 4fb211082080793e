"""Figure rendering: one panel per domain, series per (planner, beta0)."""

from __future__ import annotations

import os
from pathlib import Path
from typing import List

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .frame import SweepFrame, series_tables

__all__ = ["PLANNER_STYLES", "plot_sweep"]

# Fixed planner -> (color, marker) so figures are comparable across runs.
PLANNER_STYLES = {
    "posts": ("tab:blue", "o"),
    "poolts": ("tab:orange", "s"),
    "pooluct": ("tab:green", "^"),
    "pomcp": ("tab:red", "v"),
    "random": ("tab:gray", "x"),
}
_FALLBACK_STYLE = ("tab:purple", "d")
# Within one planner, prior rates are told apart by line style, assigned in
# ascending beta0 order.
_LINESTYLES = ("-", "--", ":", "-.")

_X_LABELS = {
    "budget": "simulation budget $n_b$",
    "horizon": "planning horizon $T$",
    "memory": "memory capacity $n_{mem}$",
}


def plot_sweep(csv_path: os.PathLike, x_axis: str, out_dir: os.PathLike) -> List[Path]:
    """Render one image pair (PNG and SVG) per domain found in the CSV.

    The x axis is log-scaled (base 2) for budget and memory sweeps and
    linear for horizon sweeps; each series shows the mean undiscounted
    return with a shaded band of one standard error.  Returns the written
    file paths sorted by name.
    """
    frame = SweepFrame.from_csv(csv_path)
    tables = series_tables(frame, x_axis)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    for domain, panel in tables.items():
        beta_rank = _beta_ranks(panel)
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        for (planner, beta0), points in panel.items():
            color, marker = PLANNER_STYLES.get(planner, _FALLBACK_STYLE)
            style = _LINESTYLES[beta_rank[(planner, beta0)] % len(_LINESTYLES)]
            xs = [p[0] for p in points]
            means = [p[1] for p in points]
            lower = [p[1] - p[2] for p in points]
            upper = [p[1] + p[2] for p in points]
            ax.fill_between(xs, lower, upper, color=color, alpha=0.2, linewidth=0)
            ax.plot(
                xs,
                means,
                color=color,
                marker=marker,
                linestyle=style,
                label=f"{planner} $\\beta_0$={beta0:g}",
            )
        if x_axis in ("budget", "memory"):
            ax.set_xscale("log", base=2)
        ax.set_xlabel(_X_LABELS[x_axis])
        ax.set_ylabel("mean undiscounted return")
        ax.set_title(domain)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        for suffix in (".png", ".svg"):
            path = out / f"{x_axis}_{domain}{suffix}"
            fig.savefig(path, dpi=150)
            written.append(path)
        plt.close(fig)
    return sorted(written)


def _beta_ranks(panel) -> dict:
    """Rank beta0 values per planner in ascending order for line styles."""
    by_planner: dict = {}
    for planner, beta0 in panel:
        by_planner.setdefault(planner, set()).add(beta0)
    ranks = {}
    for planner, betas in by_planner.items():
        for rank, beta0 in enumerate(sorted(betas)):
            ranks[(planner, beta0)] = rank
    return ranks
