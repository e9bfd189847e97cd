"""Convergence-rate experiments: error versus noise level under a parameter rule."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import logging
import math
from typing import Callable, Sequence

import numpy as np

from hyporeg.core.errors import ExperimentError, InvariantError
from hyporeg.core.forward import apply_forward
from hyporeg.core.geometry import Curve, CurveFamily, CylinderField, PeriodicGrid, generate_curve, l2_error, norm_h1_error
from hyporeg.core.solver import TikhonovProblem, refine, solve
from hyporeg.shared.metrics import (
    ChoiceRule,
    fit_loglog,
    non_increasing_with_slack,
    parameter_choice,
    power_rule_exponent,
    predicted_exponent,
)

from .noise import NoiseKind, NoiseSpec, add_noise


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RateExperimentConfig:
    truth: CurveFamily
    grid: PeriodicGrid
    deltas: tuple[float, ...]
    rule: ChoiceRule = "constant"
    alpha0: float = 0.05
    exponent: float | None = None
    smoothness: tuple[float, float] | None = None
    repetitions: int = 5
    seed: int = 0
    noise: NoiseKind = "gaussian"
    refine_sweeps: int = 50
    level_count: int | None = None
    floor_factor: float = 5.0
    resolve_cells: float = 0.0
    fast_cycle: bool = False
    max_workers: int = 1

    def __post_init__(self) -> None:
        deltas = tuple(float(d) for d in self.deltas)
        object.__setattr__(self, "deltas", deltas)
        if not deltas:
            raise InvariantError("a rate experiment needs at least one delta")
        if any(not math.isfinite(d) or d <= 0 for d in deltas):
            raise InvariantError("deltas must be finite and > 0")
        if any(b >= a for a, b in zip(deltas, deltas[1:])):
            raise InvariantError("deltas must be strictly descending")
        if self.rule not in ("power", "constant"):
            raise InvariantError(f"unknown parameter choice rule {self.rule!r}")
        if self.alpha0 <= 0:
            raise InvariantError("alpha0 must be > 0")
        if self.repetitions < 1:
            raise InvariantError("repetitions must be >= 1")
        if not math.isfinite(self.resolve_cells) or self.resolve_cells < 0:
            raise InvariantError("resolve_cells must be finite and >= 0")
        if self.noise not in ("gaussian", "shift", "wave"):
            raise InvariantError(f"rate experiments support gaussian, shift or wave noise, got {self.noise!r}")
        s, q = self.nominal
        if not 1.0 < s <= 2.0 or q <= 1.0:
            raise InvariantError(f"smoothness tag out of range: s={s}, q={q}")

    @property
    def nominal(self) -> tuple[float, float]:
        return self.smoothness if self.smoothness is not None else self.truth.smoothness()

    @property
    def alpha_exponent(self) -> float:
        if self.exponent is not None:
            return self.exponent
        return power_rule_exponent(*self.nominal)

    def alpha_for(self, delta: float) -> float:
        return parameter_choice(self.rule, delta, self.alpha0, self.alpha_exponent)

    @property
    def min_delta(self) -> float:
        """Smallest delta whose perturbation δ²/4 spans resolve_cells radial cells."""
        return 2.0 * math.sqrt(self.resolve_cells * self.grid.h_x)


@dataclass(frozen=True)
class RateCell:
    delta: float
    alpha: float
    rep: int
    h1_error: float
    l2_error: float
    objective: float
    misfit: float
    regularizer: float


@dataclass(frozen=True)
class RateSummaryRow:
    delta: float
    alpha: float
    mean_h1: float
    max_h1: float
    mean_l2: float
    max_l2: float
    bound_h1: float


@dataclass(frozen=True)
class RateReport:
    cells: tuple[RateCell, ...]
    summary: tuple[RateSummaryRow, ...]
    slope: float
    intercept: float
    residual: float
    predicted_exponent: float
    floor_h1: float
    floor_l2: float
    fit_window: tuple[float, ...]
    floor_dominated: bool
    monotone: bool
    smoothness: tuple[float, float]


def phi_bound(delta: float, alpha: float, c1: float, c2: float) -> float:
    """H¹₀ error bound sqrt((δ²/α + 2 c₂ δ²)/c₁) for smooth truths (s = 2, q = ∞).

    Valid when α ≤ 1/(2 c₂); NaN otherwise.
    """
    if c1 <= 0 or alpha <= 0:
        raise InvariantError("phi_bound needs c1 > 0 and alpha > 0")
    if c2 > 0 and alpha > 1.0 / (2.0 * c2):
        return math.nan
    return math.sqrt((delta * delta / alpha + 2.0 * c2 * delta * delta) / c1)


def _solve_cell(cfg: RateExperimentConfig, data: CylinderField, alpha: float) -> tuple[Curve, float, float, float]:
    problem = TikhonovProblem(data, alpha, cfg.level_count)
    report = solve(problem, fast_cycle=cfg.fast_cycle)
    if cfg.refine_sweeps:
        report = refine(report, problem, cfg.refine_sweeps)
    return report.minimizer, report.objective, report.misfit_part, report.regularizer_part


def _run_cell(cfg: RateExperimentConfig, truth: Curve, clean: CylinderField, delta_index: int, rep: int) -> RateCell:
    delta = cfg.deltas[delta_index]
    try:
        alpha = cfg.alpha_for(delta)
        spec = NoiseSpec(delta=delta, kind=cfg.noise, seed=cfg.seed, delta_index=delta_index, rep=rep)
        noisy = add_noise(clean, spec, truth=truth, alpha=alpha)
        minimizer, objective, misfit_part, regularizer = _solve_cell(cfg, noisy, alpha)
    except Exception as exc:
        raise ExperimentError(f"rate cell failed at delta={delta:.6g}, rep={rep}: {exc}") from exc
    cell = RateCell(
        delta=delta,
        alpha=alpha,
        rep=rep,
        h1_error=norm_h1_error(minimizer, truth),
        l2_error=l2_error(minimizer, truth),
        objective=objective,
        misfit=misfit_part,
        regularizer=regularizer,
    )
    logger.info("rate cell delta=%.6g rep=%d h1=%.6g l2=%.6g", delta, rep, cell.h1_error, cell.l2_error)
    return cell


def _floor(cfg: RateExperimentConfig, truth: Curve, clean: CylinderField) -> tuple[float, float]:
    """Error with exact data at the α used for the smallest delta."""
    alpha = cfg.alpha_for(cfg.deltas[-1])
    try:
        minimizer, *_ = _solve_cell(cfg, clean, alpha)
    except Exception as exc:
        raise ExperimentError(f"clean-data solve failed: {exc}") from exc
    return norm_h1_error(minimizer, truth), l2_error(minimizer, truth)


def summarize(
    cells: Sequence[RateCell],
    deltas: Sequence[float],
    *,
    floor_h1: float,
    floor_factor: float = 5.0,
    min_delta: float = 0.0,
    bound: Callable[[float, float], float] | None = None,
) -> tuple[tuple[RateSummaryRow, ...], tuple[float, ...]]:
    """Per-delta aggregates plus the fit window.

    A delta enters the window when its mean H¹ error exceeds floor_factor times
    the clean-data floor and delta >= min_delta (the grid-resolution cutoff).
    """
    rows = []
    window = []
    for delta in deltas:
        group = [cell for cell in cells if cell.delta == delta]
        h1 = np.array([cell.h1_error for cell in group])
        l2 = np.array([cell.l2_error for cell in group])
        alpha = group[0].alpha
        row = RateSummaryRow(
            delta=delta,
            alpha=alpha,
            mean_h1=float(h1.mean()),
            max_h1=float(h1.max()),
            mean_l2=float(l2.mean()),
            max_l2=float(l2.max()),
            bound_h1=bound(delta, alpha) if bound is not None else math.nan,
        )
        rows.append(row)
        if row.mean_h1 > floor_factor * floor_h1 and row.mean_h1 > 0 and delta >= min_delta:
            window.append(delta)
    return tuple(rows), tuple(window)


def run_rate_experiment(cfg: RateExperimentConfig) -> RateReport:
    truth = generate_curve(cfg.truth, cfg.grid)
    clean = apply_forward(truth)
    s, q = cfg.nominal

    jobs = [(d, r) for d in range(len(cfg.deltas)) for r in range(cfg.repetitions)]
    if cfg.max_workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.max_workers) as pool:
            cells = list(pool.map(lambda job: _run_cell(cfg, truth, clean, *job), jobs))
    else:
        cells = [_run_cell(cfg, truth, clean, d, r) for d, r in jobs]

    floor_h1, floor_l2 = _floor(cfg, truth, clean)

    bound = None
    if s == 2.0 and math.isinf(q):
        c2 = 2.0 * cfg.truth.curvature_sup()

        def bound(delta: float, alpha: float) -> float:
            return phi_bound(delta, alpha, 1.0, c2)

    summary, window = summarize(
        cells,
        cfg.deltas,
        floor_h1=floor_h1,
        floor_factor=cfg.floor_factor,
        min_delta=cfg.min_delta,
        bound=bound,
    )
    in_window = [row for row in summary if row.delta in window]
    fit = fit_loglog([row.delta for row in in_window], [row.mean_h1 for row in in_window])
    floor_dominated = fit.points < 2
    if floor_dominated:
        logger.warning("rate fit is floor-dominated (%d point(s) above %.3g x floor)", fit.points, cfg.floor_factor)

    return RateReport(
        cells=tuple(cells),
        summary=summary,
        slope=fit.slope,
        intercept=fit.intercept,
        residual=fit.residual,
        predicted_exponent=predicted_exponent(s, q),
        floor_h1=floor_h1,
        floor_l2=floor_l2,
        fit_window=window,
        floor_dominated=floor_dominated,
        monotone=non_increasing_with_slack([row.mean_h1 for row in summary], 0.2, atol=floor_h1),
        smoothness=(s, q),
    )
