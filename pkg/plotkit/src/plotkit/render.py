"""Render figures: simulation dots with closed-form overlay lines.

Axis units follow the conventions of the source material: detuning in MHz,
power in pW, time in us.  Overlay parameters come from each run's
summary.json; nothing is re-fit here.  With a fixed style the output is a
pure function of the input files (byte-stable across invocations).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .recipe import FigureRecipe, RunData, load_run  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 130,
    "savefig.dpi": 130,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.markersize": 3.2,
}

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


def _label(run: RunData) -> str:
    n_c = run.summary.get("n_c", 0.0)
    return f"$N_c = {n_c:g}$"


def _draw_eit(ax, runs: list[RunData], overlay: bool):
    for color, run in zip(COLORS, runs):
        x = np.asarray(run.columns["detuning_hz"]) / 1e6
        y = np.asarray(run.columns["p_out_w"]) * 1e12
        ax.plot(x, y, "o", color=color, label=_label(run))
        if overlay:
            fwhm = run.summary["fwhm_eq10_hz"] / 1e6
            peak = run.summary["peak_p_out_w"] * 1e12
            grid = np.linspace(x.min(), x.max(), 600)
            hwhm = 0.5 * fwhm
            ax.plot(grid, peak * hwhm**2 / (grid**2 + hwhm**2), "-", color=color,
                    linewidth=1.2)
    ax.set_xlabel("probe detuning (MHz)")
    ax.set_ylabel("output power (pW)")


def _draw_vrs(ax, runs: list[RunData], overlay: bool):
    for color, run in zip(COLORS, runs):
        x = np.asarray(run.columns["detuning_hz"]) / 1e6
        y = np.asarray(run.columns["p_out_w"]) * 1e12
        ax.plot(x, y, "o-", color=color, linewidth=0.8, label=_label(run))
        if overlay:
            half = 0.5 * run.summary["formula_splitting_hz"] / 1e6
            for pos in (-half, half):
                ax.axvline(pos, color=color, linestyle="--", linewidth=1.0,
                           alpha=0.7)
    ax.set_xlabel("probe detuning (MHz)")
    ax.set_ylabel("output power (pW)")


def _draw_ringdown(ax, runs: list[RunData], overlay: bool):
    for color, run in zip(COLORS, runs):
        t = np.asarray(run.columns["t_s"]) * 1e6
        y = np.asarray(run.columns["p_out_w"]) * 1e12
        ax.plot(t, y, "o", color=color, label=_label(run))
        if overlay:
            rate = run.summary["rate_eq10_per_s"]
            i0 = run.summary["steady_p_out_w"] * 1e12
            grid = np.linspace(t.min(), t.max(), 600)
            ax.plot(grid, i0 * np.exp(-rate * grid / 1e6), "-", color=color,
                    linewidth=1.2)
    ax.set_yscale("log")
    ax.set_xlabel("time (us)")
    ax.set_ylabel("output power (pW)")


DRAWERS = {"eit": _draw_eit, "vrs": _draw_vrs, "ringdown": _draw_ringdown}


def render(recipe: FigureRecipe) -> Path:
    """Render the recipe to its output image; returns the output path."""
    runs = [load_run(run_dir, recipe.kind) for run_dir in recipe.runs]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        DRAWERS[recipe.kind](ax, runs, recipe.overlay)
        ax.legend(loc="best")
        fig.tight_layout()
        recipe.output.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(recipe.output, metadata={"Software": "plotkit"})
        plt.close(fig)
    return recipe.output
