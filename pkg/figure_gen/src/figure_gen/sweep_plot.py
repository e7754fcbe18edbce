"""Power-versus-sum-rate comparison figure rendered from sweep CSVs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.figure import Figure

from .schema import DataError, SweepPoint, read_sweep_csv

DEFAULT_STYLES: Mapping[str, dict] = {
    "joint-bisection": {"color": "tab:blue", "marker": "o", "linestyle": "-"},
    "joint-exhaustive": {"color": "tab:orange", "marker": "s", "linestyle": "--"},
    "single-user": {"color": "tab:green", "marker": "^", "linestyle": ":"},
}
_FALLBACK_STYLE = {"color": "tab:gray", "marker": ".", "linestyle": "-"}

# Fixed salt keeps the SVG element ids, and therefore the bytes,
# stable across renders of identical input.
_SVG_SALT = "figure-gen"


@dataclass(frozen=True)
class FigureSpec:
    """What to read, where to render, and which rows to keep."""

    inputs: tuple[str, ...]
    output: str
    psi: float | None = None
    annotate_gap: bool = False
    styles: Mapping[str, dict] = field(default_factory=lambda: DEFAULT_STYLES)

    def __post_init__(self) -> None:
        if not self.inputs:
            raise ValueError("at least one input CSV is required")


def load_points(spec: FigureSpec) -> tuple[SweepPoint, ...]:
    """Concatenate the input CSVs and apply the rate-ratio filter."""
    points: list[SweepPoint] = []
    for path in spec.inputs:
        points.extend(read_sweep_csv(path))
    if spec.psi is not None:
        points = [p for p in points if math.isclose(p.psi, spec.psi, rel_tol=1e-9)]
        if not points:
            raise DataError(f"no rows with psi = {spec.psi:g} in {', '.join(spec.inputs)}")
    if not points:
        raise DataError(f"no rows in {', '.join(spec.inputs)}")
    return tuple(points)


def group_curves(points: tuple[SweepPoint, ...]) -> dict[tuple[str, float], list[SweepPoint]]:
    """Feasible points per (scheme, psi) curve, in rate order."""
    curves: dict[tuple[str, float], list[SweepPoint]] = {}
    for p in points:
        if p.feasible:
            curves.setdefault((p.scheme, p.psi), []).append(p)
    for pts in curves.values():
        pts.sort(key=lambda p: p.r_tot)
    return curves


def max_single_user_gap(points: tuple[SweepPoint, ...]) -> tuple[float, float]:
    """(r_tot, gap_db) where single-user exceeds joint bisection the most."""
    by_rate: dict[float, dict[str, float]] = {}
    for p in points:
        if p.feasible:
            by_rate.setdefault(p.r_tot, {})[p.scheme] = p.mean_power_dbm
    gaps = [
        (r, at["single-user"] - at["joint-bisection"])
        for r, at in by_rate.items()
        if "single-user" in at and "joint-bisection" in at
    ]
    if not gaps:
        raise DataError("gap annotation needs feasible single-user and joint-bisection rows")
    return max(gaps, key=lambda item: item[1])


def build_sweep_figure(
    points: tuple[SweepPoint, ...],
    styles: Mapping[str, dict] = DEFAULT_STYLES,
    annotate_gap: bool = False,
) -> tuple[Figure, str | None]:
    """Draw the comparison figure; returns it with the annotation text."""
    curves = group_curves(points)
    if not curves:
        raise DataError("no feasible rows to plot")
    multi_psi = len({psi for _, psi in curves}) > 1

    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for (scheme, psi), pts in curves.items():
        label = f"{scheme} (psi = {psi:g})" if multi_psi else scheme
        style = styles.get(scheme, _FALLBACK_STYLE)
        ax.plot([p.r_tot for p in pts], [p.mean_power_dbm for p in pts], label=label, **style)

    note = None
    if annotate_gap:
        r_star, gap_db = max_single_user_gap(points)
        at = {p.scheme: p.mean_power_dbm for p in points if p.feasible and p.r_tot == r_star}
        ax.annotate(
            "",
            xy=(r_star, at["joint-bisection"]),
            xytext=(r_star, at["single-user"]),
            arrowprops={"arrowstyle": "<->", "color": "black"},
        )
        note = f"{gap_db:.1f} dB"
        mid = 0.5 * (at["joint-bisection"] + at["single-user"])
        ax.text(r_star, mid, f" {note}", va="center")

    ax.set_xlabel("sum rate (bits/s/Hz)")
    ax.set_ylabel("average transmit power (dBm)")
    ax.grid(True, alpha=0.4)
    ax.legend()
    fig.tight_layout()
    return fig, note


def save_figure(fig: Figure, path: str) -> None:
    """Write a vector image with render-invariant bytes."""
    metadata = None
    if path.endswith(".svg"):
        metadata = {"Date": None}
    elif path.endswith(".pdf"):
        metadata = {"CreationDate": None}
    with plt.rc_context({"svg.hashsalt": _SVG_SALT, "svg.fonttype": "none"}):
        fig.savefig(path, metadata=metadata)


def plot_sweep(spec: FigureSpec) -> str:
    """Render the figure described by spec; returns the output path."""
    points = load_points(spec)
    fig, note = build_sweep_figure(points, spec.styles, spec.annotate_gap)
    try:
        save_figure(fig, spec.output)
    finally:
        plt.close(fig)
    print(f"wrote {spec.output}")
    if note is not None:
        r_star, gap_db = max_single_user_gap(points)
        print(f"max single-user gap: {gap_db:.1f} dB at sum rate {r_star:g}")
    return spec.output
