"""The hypograph operator, fidelity terms and the solver's data-cost table."""

from __future__ import annotations

from dataclasses import dataclass
import logging
import math
from typing import Literal

import numpy as np

from .errors import InvariantError
from .geometry import Curve, CylinderField, PeriodicGrid, signed_l1


logger = logging.getLogger(__name__)

Sampling = Literal["node", "interpolant"]


def _coverage_column(heights: np.ndarray, edges: np.ndarray, h_x: float) -> np.ndarray:
    """clip((y - x_j)/h_x, 0, 1) for every height and every radial cell."""
    return np.clip((heights[..., None] - edges[:-1]) / h_x, 0.0, 1.0)


def _coverage_primitive(y: np.ndarray, lower: np.ndarray, h_x: float) -> np.ndarray:
    """Antiderivative in y of the coverage fraction of the cell starting at ``lower``."""
    inside = np.clip(y - lower, 0.0, h_x)
    above = np.maximum(y - lower - h_x, 0.0)
    return inside**2 / (2.0 * h_x) + above


def _segment_coverage(a: np.ndarray, b: np.ndarray, edges: np.ndarray, h_x: float) -> np.ndarray:
    """Mean coverage of every cell while the height moves linearly from a to b."""
    lower = edges[:-1]
    a2 = a[:, None]
    b2 = b[:, None]
    span = b2 - a2
    flat = np.abs(span) <= 1e-14 * h_x
    safe = np.where(flat, 1.0, span)
    sloped = (_coverage_primitive(b2, lower, h_x) - _coverage_primitive(a2, lower, h_x)) / safe
    level = np.clip((0.5 * (a2 + b2) - lower) / h_x, 0.0, 1.0)
    return np.where(flat, level, sloped)


def apply_forward(curve: Curve, grid: PeriodicGrid | None = None, sampling: Sampling = "node") -> CylinderField:
    """Cell-averaged indicator of the hypograph of ``curve``.

    ``"node"`` holds each node height across its angle cell. ``"interpolant"``
    averages the exact coverage of the piecewise-linear curve over the angle
    window [t_i - h_t/2, t_i + h_t/2].
    """
    grid = grid or curve.grid
    grid.require_same(curve.grid)
    values = curve.values
    if sampling == "node":
        cells = _coverage_column(values, grid.edges, grid.h_x)
    elif sampling == "interpolant":
        before = 0.5 * (np.roll(values, 1) + values)
        after = 0.5 * (values + np.roll(values, -1))
        cells = 0.5 * (
            _segment_coverage(before, values, grid.edges, grid.h_x)
            + _segment_coverage(values, after, grid.edges, grid.h_x)
        )
        cells = np.clip(cells, 0.0, 1.0)
    else:
        raise InvariantError(f"unknown sampling mode {sampling!r}")
    return CylinderField(cells, grid)


def fidelity_exact(a: Curve, b: Curve) -> float:
    """‖F(a) - F(b)‖² in L², which equals the L¹ distance of the curves."""
    a.grid.require_same(b.grid)
    return float(signed_l1(a.values - b.values, a.grid.h_t))


def lp_distance(a: Curve, b: Curve, p: float) -> float:
    if not math.isfinite(p) or p < 1.0:
        raise InvariantError(f"lp_distance requires finite p >= 1, got {p}")
    return fidelity_exact(a, b) ** (1.0 / p)


@dataclass(frozen=True, eq=False)
class DataCostTable:
    """Per-node misfit profiles g_i, piecewise linear between radial cell boundaries.

    ``breakpoints[i, k]`` is g_i(x_k); ``slopes[i, j]`` is h_t (1 - 2 u[i, j]).
    """

    breakpoints: np.ndarray
    slopes: np.ndarray
    grid: PeriodicGrid

    def _cells(self, heights: np.ndarray, *, left_limit: bool = False) -> np.ndarray:
        side = "left" if left_limit else "right"
        index = np.searchsorted(self.grid.edges, heights, side=side) - 1
        return np.clip(index, 0, self.grid.n_x - 1)

    def evaluate(self, heights: np.ndarray) -> np.ndarray:
        """g_i(heights[..., i]); exact breakpoint values at cell boundaries."""
        heights = np.clip(np.asarray(heights, dtype=float), 0.0, self.grid.x_max)
        if heights.shape[-1] != self.grid.n_t:
            raise InvariantError(f"expected {self.grid.n_t} heights on the last axis, got {heights.shape}")
        nodes = np.arange(self.grid.n_t)
        cells = self._cells(heights)
        offset = heights - self.grid.edges[cells]
        values = self.breakpoints[nodes, cells] + self.slopes[nodes, cells] * offset
        return np.where(heights >= self.grid.x_max, self.breakpoints[:, -1], values)

    def at_levels(self, levels: np.ndarray) -> np.ndarray:
        """The n_t × m matrix of costs at the admissible heights."""
        levels = np.asarray(levels, dtype=float)
        if levels.shape == self.grid.edges.shape and np.array_equal(levels, self.grid.edges):
            return np.ascontiguousarray(self.breakpoints)
        grid_of_heights = np.broadcast_to(levels[:, None], (levels.size, self.grid.n_t))
        return np.ascontiguousarray(self.evaluate(grid_of_heights).T)

    def gradient(self, heights: np.ndarray) -> np.ndarray:
        """Per-node slope of g_i, taking the cell below a breakpoint height."""
        heights = np.asarray(heights, dtype=float)
        cells = self._cells(heights, left_limit=True)
        return self.slopes[np.arange(self.grid.n_t), cells]


def build_cost_table(u: CylinderField) -> DataCostTable:
    grid = u.grid
    cells = u.cells
    below = np.zeros((grid.n_t, grid.n_x + 1))
    above = np.zeros((grid.n_t, grid.n_x + 1))
    below[:, 1:] = np.cumsum((1.0 - cells) ** 2, axis=1)
    above[:, :-1] = np.cumsum((cells**2)[:, ::-1], axis=1)[:, ::-1]
    breakpoints = grid.h_t * grid.h_x * (below + above)
    slopes = grid.h_t * (1.0 - 2.0 * cells)
    breakpoints.setflags(write=False)
    slopes.setflags(write=False)
    logger.debug("cost table built for grid %dx%d", grid.n_t, grid.n_x)
    return DataCostTable(breakpoints=breakpoints, slopes=slopes, grid=grid)


def misfit(curve: Curve, u: CylinderField) -> float:
    curve.grid.require_same(u.grid)
    return float(np.sum(build_cost_table(u).evaluate(curve.values)))


def misfit_gradient(curve: Curve, u: CylinderField) -> np.ndarray:
    curve.grid.require_same(u.grid)
    return build_cost_table(u).gradient(curve.values)


def projection_residual(curve: Curve) -> float:
    """misfit(curve, apply_forward(curve)) in closed form: Σ h_t h_x f (1 - f)."""
    grid = curve.grid
    scaled = curve.values / grid.h_x
    fraction = scaled - np.floor(scaled)
    return float(grid.h_t * grid.h_x * np.sum(fraction * (1.0 - fraction)))
