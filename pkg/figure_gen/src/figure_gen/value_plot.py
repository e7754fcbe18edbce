"""Planner value-surface heatmaps with the optimal-action overlay."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.figure import Figure

from .schema import DataError, ValuePoint, read_value_csv
from .sweep_plot import save_figure


def bisection_ridge(
    points: tuple[ValuePoint, ...], k: int
) -> tuple[np.ndarray, np.ndarray]:
    """Equal-width states' (width, argmin action) pairs at slot k."""
    rows = sorted(
        (p.u1_frac, p.argmin_w1_frac)
        for p in points
        if p.k == k and p.rho and p.argmin_w1_frac is not None
    )
    widths = np.array([u for u, _ in rows])
    actions = np.array([w for _, w in rows])
    return widths, actions


def _heatmap(points: list[ValuePoint]) -> tuple[np.ndarray, np.ndarray]:
    """Dense value grid over disjoint-support states; NaN off lattice."""
    fracs = np.array(sorted({p.u1_frac for p in points}))
    index = {u: i for i, u in enumerate(fracs)}
    grid = np.full((fracs.size, fracs.size), np.nan)
    for p in points:
        grid[index[p.u2_frac], index[p.u1_frac]] = p.value_j
    return fracs, grid


def build_value_figure(points: tuple[ValuePoint, ...], slot: int | None = None) -> Figure:
    """One heatmap panel per slot with the halving ridge overlaid."""
    slots = sorted({p.k for p in points})
    if slot is not None:
        if slot not in slots:
            raise DataError(f"no rows for slot {slot}; table covers {slots}")
        slots = [slot]

    ncols = min(len(slots), 4)
    nrows = math.ceil(len(slots) / ncols)
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(3.4 * ncols, 3.2 * nrows), squeeze=False
    )
    for ax in axes.flat[len(slots) :]:
        ax.set_axis_off()

    for ax, k in zip(axes.flat, slots):
        pairs = [p for p in points if p.k == k and not p.rho]
        if not pairs:
            raise DataError(f"slot {k} has no disjoint-support rows")
        fracs, grid = _heatmap(pairs)
        # Values span orders of magnitude; color the exponent.
        with np.errstate(divide="ignore"):
            ax.pcolormesh(fracs, fracs, np.log10(grid), shading="nearest")
        widths, actions = bisection_ridge(points, k)
        if widths.size:
            ax.plot(widths, actions, color="white", linewidth=1.5, label="argmin action")
            ax.plot(
                widths,
                widths / 2.0,
                color="red",
                linewidth=0.8,
                linestyle="--",
                label="half split",
            )
        ax.set_title(f"k = {k}")
        ax.set_xlabel("u1 / sigma")
        ax.set_ylabel("u2 / sigma")
    handles, labels = axes.flat[0].get_legend_handles_labels()
    if handles:
        fig.legend(handles, labels, loc="lower right")
    fig.tight_layout()
    return fig


def plot_value_table(input_path: str, output_path: str, slot: int | None = None) -> str:
    """Render the value-table dump at input_path; returns the output path."""
    points = read_value_csv(input_path)
    if not points:
        raise DataError(f"no rows in {input_path}")
    fig = build_value_figure(points, slot)
    try:
        save_figure(fig, output_path)
    finally:
        plt.close(fig)
    print(f"wrote {output_path}")
    return output_path
