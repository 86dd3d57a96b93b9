"""Figure rendering for the report paths; headless, files only."""

from __future__ import annotations

from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_value_figure(
    path: str,
    grid: Sequence[float],
    values: Sequence[float],
    envelope_values: Sequence[float] | None = None,
    marks: Sequence[tuple[float, float]] = (),
    title: str = "stage value and concave envelope",
) -> str:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(grid, values, color="#1a3550", lw=1.8, label="sampled value")
    if envelope_values is not None:
        ax.plot(
            grid,
            envelope_values,
            color="#c0392b",
            lw=1.4,
            ls="--",
            label="concave envelope",
        )
    for x, y in marks:
        ax.plot([x], [y], marker="o", color="#c0392b", ms=6)
    ax.set_xlabel("probability of the first state")
    ax.set_ylabel("value")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_belief_figure(
    path: str,
    trajectories: Sequence[Sequence[float]],
    title: str = "posterior trajectory",
    block_marks: Sequence[int] = (),
) -> str:
    """Plot first-coordinate posterior paths over stages, one line per episode."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for traj in trajectories:
        ax.plot(range(len(traj)), traj, lw=1.0, alpha=0.8)
    for t in block_marks:
        ax.axvline(t, color="#c0392b", lw=0.8, ls=":", alpha=0.7)
    ax.set_xlabel("stage")
    ax.set_ylabel("posterior of the first state")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_gap_figure(
    path: str,
    maxmin_value: float,
    panel_values: Mapping[str, float],
    title: str = "guarantee versus punished opponents",
) -> str:
    """Bar chart: each opponent's punished value next to the maxmin line."""
    names = list(panel_values)
    vals = [panel_values[n] for n in names]
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    ax.bar(range(len(names)), vals, color="#1a3550", width=0.6)
    ax.axhline(
        maxmin_value, color="#c0392b", lw=1.4, ls="--", label="maxmin guarantee"
    )
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("expected payoff")
    ax.set_title(title)
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
