"""Global minimisation of the discrete Tikhonov functional.

The objective over node heights γ_i is

    Σ_i g_i(γ_i) + (α / h_t) Σ_i (γ_{i+1} - γ_i)²

with g_i from the data-cost table. ``solve`` restricts heights to the level set
and finds the exact minimiser by pinning node 0 to every level in turn; each
pinned problem is an open chain handled by a Viterbi pass whose quadratic
min-convolution runs on the lower envelope of parabolas.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import itertools
import logging
import math
from typing import Literal, Sequence

import numpy as np

from . import kernels
from .errors import InvariantError, NumericalError
from .forward import DataCostTable, build_cost_table
from .geometry import Curve, CylinderField, PeriodicGrid, seminorm_values


logger = logging.getLogger(__name__)

DEFAULT_REFINE_SWEEPS = 50
REFINE_TOLERANCE = 1e-12
BRUTE_FORCE_LIMIT = 2_000_000

CycleMode = Literal["exact", "fast"]


@dataclass(frozen=True, eq=False)
class TikhonovProblem:
    data: CylinderField
    alpha: float
    level_count: int | None = None
    table: DataCostTable | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if not math.isfinite(self.alpha) or self.alpha <= 0:
            raise InvariantError(f"alpha must be > 0, got {self.alpha}")
        if self.level_count is not None and self.level_count < 2:
            raise InvariantError(f"level_count must be >= 2, got {self.level_count}")
        if self.table is None:
            object.__setattr__(self, "table", build_cost_table(self.data))
        else:
            self.table.grid.require_same(self.data.grid)

    @property
    def grid(self) -> PeriodicGrid:
        return self.data.grid

    @property
    def levels(self) -> np.ndarray:
        return self.grid.levels(self.level_count)

    @property
    def transition_weight(self) -> float:
        return self.alpha / self.grid.h_t

    def with_alpha(self, alpha: float) -> TikhonovProblem:
        """Same data and cost table, new regularization weight."""
        return replace(self, alpha=alpha)


@dataclass(frozen=True, eq=False)
class SolveReport:
    minimizer: Curve
    objective: float
    misfit_part: float
    regularizer_part: float
    restarts_used: int
    refined: bool
    alpha: float
    level_indices: np.ndarray | None = None
    cycle_mode: CycleMode = "exact"


def objective_parts(table: DataCostTable, alpha: float, heights: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(objective, misfit, regularizer) for one or a batch of height vectors."""
    heights = np.asarray(heights, dtype=float)
    data_term = np.sum(table.evaluate(heights), axis=-1)
    regularizer = seminorm_values(heights, table.grid.h_t)
    return data_term + alpha * regularizer, data_term, regularizer


def discrete_objective(table: DataCostTable, alpha: float, heights: np.ndarray) -> float | np.ndarray:
    total, _, _ = objective_parts(table, alpha, heights)
    return total if np.ndim(total) else float(total)


def _report(
    problem: TikhonovProblem,
    heights: np.ndarray,
    *,
    restarts: int,
    refined: bool,
    indices: np.ndarray | None,
    cycle_mode: CycleMode,
) -> SolveReport:
    total, data_term, regularizer = objective_parts(problem.table, problem.alpha, heights)
    if not np.isfinite(total):
        raise NumericalError("solver produced a non-finite objective")
    return SolveReport(
        minimizer=Curve(heights, problem.grid),
        objective=float(total),
        misfit_part=float(data_term),
        regularizer_part=float(regularizer),
        restarts_used=restarts,
        refined=refined,
        alpha=problem.alpha,
        level_indices=indices,
        cycle_mode=cycle_mode,
    )


def envelope_min(
    costs: np.ndarray,
    weight: float,
    levels: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Quadratic min-convolution ``out[k] = min_j costs[j] + weight (y_k - y_j)²``.

    ``levels`` defaults to 0, 1, ..., m-1. Returns the minima and the argmin
    (lowest index on ties; -1 where every cost is infinite).
    """
    costs = np.ascontiguousarray(costs, dtype=np.float64)
    if not weight > 0:
        raise InvariantError(f"envelope weight must be > 0, got {weight}")
    if levels is None:
        levels = np.arange(costs.size, dtype=np.float64)
    levels = np.ascontiguousarray(levels, dtype=np.float64)
    if levels.shape != costs.shape:
        raise InvariantError("costs and levels must have the same length")
    if costs.size > 1 and np.any(np.diff(levels) <= 0):
        raise InvariantError("levels must be strictly increasing")
    out = np.empty_like(costs)
    arg = np.empty(costs.size, dtype=np.int64)
    kernels.envelope_into(costs, levels, float(weight), out, arg)
    return out, arg


def _run_restarts(
    costs: np.ndarray,
    levels: np.ndarray,
    weight: float,
    starts: np.ndarray,
    max_workers: int,
) -> tuple[np.ndarray, np.ndarray]:
    n_t = costs.shape[0]
    values = np.empty(starts.size)
    paths = np.empty((starts.size, n_t), dtype=np.int64)
    if max_workers <= 1 or starts.size < 2:
        kernels.cyclic_restarts(costs, levels, weight, starts, values, paths)
        return values, paths

    chunks = [chunk for chunk in np.array_split(np.arange(starts.size), max_workers) if chunk.size]

    def run(chunk: np.ndarray) -> None:
        chunk_values = np.empty(chunk.size)
        chunk_paths = np.empty((chunk.size, n_t), dtype=np.int64)
        kernels.cyclic_restarts(costs, levels, weight, np.ascontiguousarray(starts[chunk]), chunk_values, chunk_paths)
        values[chunk] = chunk_values
        paths[chunk] = chunk_paths

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        list(pool.map(run, chunks))
    return values, paths


def solve(problem: TikhonovProblem, *, fast_cycle: bool = False, max_workers: int = 1) -> SolveReport:
    """Global minimiser over the level set.

    The exact mode pins node 0 to each level; among equally good results the
    lowest pinned level wins, and inside a pass the lowest level index wins.
    ``fast_cycle`` runs one open pass and one pass pinned to its node-0 level;
    it is not guaranteed optimal.
    """
    levels = np.ascontiguousarray(problem.levels, dtype=np.float64)
    costs = np.ascontiguousarray(problem.table.at_levels(levels), dtype=np.float64)
    weight = problem.transition_weight
    m = levels.size

    if fast_cycle:
        open_path = np.empty(problem.grid.n_t, dtype=np.int64)
        kernels.chain_pass(costs, levels, weight, -1, False, open_path)
        starts = np.array([open_path[0]], dtype=np.int64)
        restarts = 2
        cycle_mode: CycleMode = "fast"
    else:
        starts = np.arange(m, dtype=np.int64)
        restarts = m
        cycle_mode = "exact"

    values, paths = _run_restarts(costs, levels, weight, starts, max_workers)
    if not np.any(np.isfinite(values)):
        raise NumericalError("no finite restart value; the cost table is degenerate")
    # rank restarts by the reported objective so ties resolve identically to enumeration
    candidates = discrete_objective(problem.table, problem.alpha, levels[paths])
    best = int(np.argmin(candidates))
    indices = paths[best].copy()
    logger.debug(
        "solve grid=%dx%d levels=%d restarts=%d mode=%s objective=%.12g",
        problem.grid.n_t,
        problem.grid.n_x,
        m,
        restarts,
        cycle_mode,
        float(candidates[best]),
    )
    return _report(problem, levels[indices], restarts=restarts, refined=False, indices=indices, cycle_mode=cycle_mode)


def refine(report: SolveReport, problem: TikhonovProblem, max_sweeps: int = DEFAULT_REFINE_SWEEPS) -> SolveReport:
    """Cyclic coordinate descent over continuous heights starting at ``report``.

    Each node moves to the exact minimiser of its one-dimensional slice. A sweep
    that would raise the evaluated objective is discarded.
    """
    if max_sweeps < 0:
        raise InvariantError(f"max_sweeps must be >= 0, got {max_sweeps}")
    table = problem.table
    edges = np.ascontiguousarray(problem.grid.edges, dtype=np.float64)
    breakpoints = np.ascontiguousarray(table.breakpoints, dtype=np.float64)
    slopes = np.ascontiguousarray(table.slopes, dtype=np.float64)
    weight = problem.transition_weight

    heights = np.array(report.minimizer.values, dtype=np.float64)
    current = discrete_objective(table, problem.alpha, heights)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        trial = heights.copy()
        moved = kernels.refine_sweep(breakpoints, slopes, edges, weight, trial)
        if moved == 0:
            break
        value = discrete_objective(table, problem.alpha, trial)
        if value > current:
            break
        improvement = current - value
        heights, current = trial, value
        if improvement < REFINE_TOLERANCE * max(abs(current), 1e-300):
            break
    logger.debug("refine sweeps=%d objective=%.12g", sweeps, current)
    return _report(
        problem,
        heights,
        restarts=report.restarts_used,
        refined=True,
        indices=None,
        cycle_mode=report.cycle_mode,
    )


def continuation_solve(
    problem: TikhonovProblem,
    alphas: Sequence[float] | np.ndarray,
    *,
    refine_sweeps: int = 0,
    fast_cycle: bool = False,
    max_workers: int = 1,
) -> list[SolveReport]:
    """One solve per α along a strictly descending path, sharing the cost table."""
    alphas = np.asarray(alphas, dtype=float)
    if alphas.size == 0:
        raise InvariantError("continuation_solve needs at least one alpha")
    if np.any(~np.isfinite(alphas)) or np.any(alphas <= 0):
        raise InvariantError("alphas must be finite and > 0")
    if np.any(np.diff(alphas) >= 0):
        raise InvariantError("alphas must be strictly descending")
    reports = []
    for alpha in alphas:
        step = problem.with_alpha(float(alpha))
        report = solve(step, fast_cycle=fast_cycle, max_workers=max_workers)
        if refine_sweeps:
            report = refine(report, step, refine_sweeps)
        reports.append(report)
    return reports


def brute_force_solve(problem: TikhonovProblem) -> SolveReport:
    """Exhaustive search over every level assignment; for tiny problems only.

    Assignments are enumerated lexicographically, so the first minimum found is
    the lexicographically smallest optimal index vector.
    """
    levels = problem.levels
    n_t = problem.grid.n_t
    count = levels.size**n_t
    if count > BRUTE_FORCE_LIMIT:
        raise InvariantError(f"{levels.size}^{n_t} assignments exceed the enumeration limit {BRUTE_FORCE_LIMIT}")
    indices = np.array(list(itertools.product(range(levels.size), repeat=n_t)), dtype=np.int64)
    values = discrete_objective(problem.table, problem.alpha, levels[indices])
    best = int(np.argmin(values))
    return _report(
        problem,
        levels[indices[best]],
        restarts=0,
        refined=False,
        indices=indices[best].copy(),
        cycle_mode="exact",
    )
