"""Static SVG figures for CLI runs."""

from __future__ import annotations

import logging
import os
from pathlib import Path
import tempfile
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from hyporeg.analysis.rates import RateReport  # noqa: E402
from hyporeg.core.geometry import Curve, CylinderField  # noqa: E402


logger = logging.getLogger(__name__)

plt.rcParams["svg.hashsalt"] = "hyporeg"


def _save(fig: plt.Figure, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".svg", dir=path.parent)
    os.close(fd)
    try:
        fig.savefig(tmp_name, format="svg", metadata={"Date": None})
        os.replace(tmp_name, path)
    finally:
        plt.close(fig)
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
    logger.info("wrote %s", path)
    return path


def plot_field(path: str | Path, field: CylinderField, curves: Sequence[tuple[Curve, str]] = ()) -> Path:
    """Heatmap of a field over (angle, height) with curves overlaid."""
    grid = field.grid
    fig, ax = plt.subplots(figsize=(8, 4))
    mesh = ax.imshow(
        field.cells.T,
        origin="lower",
        aspect="auto",
        extent=(0.0, 2.0 * np.pi, 0.0, grid.x_max),
        cmap="gray",
        interpolation="nearest",
    )
    fig.colorbar(mesh, ax=ax)
    closed_angles = np.append(grid.angles, 2.0 * np.pi)
    for curve, label in curves:
        ax.plot(closed_angles, np.append(curve.values, curve.values[0]), label=label, linewidth=1.2)
    if curves:
        ax.legend(loc="upper right")
    ax.set_xlabel("t")
    ax.set_ylabel("x")
    return _save(fig, path)


def plot_rates(path: str | Path, report: RateReport) -> Path:
    """Log-log error versus δ with the fitted line and the predicted slope."""
    deltas = np.array([row.delta for row in report.summary])
    mean_h1 = np.array([row.mean_h1 for row in report.summary])
    fig, ax = plt.subplots(figsize=(6, 4.5))
    positive = mean_h1 > 0
    ax.loglog(deltas[positive], mean_h1[positive], "o-", label="mean H1 error")
    if report.fit_window and np.isfinite(report.slope):
        window = np.array(report.fit_window)
        ax.loglog(window, np.exp(report.intercept) * window**report.slope, "--", label=f"fit slope {report.slope:.3g}")
        anchor = window[-1]
        level = np.exp(report.intercept) * anchor**report.slope
        ax.loglog(
            window,
            level * (window / anchor) ** report.predicted_exponent,
            ":",
            label=f"predicted slope {report.predicted_exponent:.3g}",
        )
    bounds = np.array([row.bound_h1 for row in report.summary])
    if np.any(np.isfinite(bounds)):
        ax.loglog(deltas, bounds, "-.", label="error bound")
    if report.floor_h1 > 0:
        ax.axhline(report.floor_h1, color="gray", linewidth=0.8, label="clean-data floor")
    ax.set_xlabel("delta")
    ax.set_ylabel("error")
    ax.legend(loc="best")
    return _save(fig, path)
