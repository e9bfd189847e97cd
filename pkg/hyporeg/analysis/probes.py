"""Structural probes of the hypograph operator and of Tikhonov minimisers."""

from __future__ import annotations

from dataclasses import dataclass
import logging
import math
from typing import Sequence

import numpy as np

from hyporeg.core.errors import InvariantError, ScheduleError
from hyporeg.core.forward import apply_forward, build_cost_table, fidelity_exact, misfit, misfit_gradient
from hyporeg.core.geometry import (
    Curve,
    CurveFamily,
    CylinderField,
    PeriodicGrid,
    generate_curve,
    l2_error,
    norm_h1_error,
    signed_l1,
)
from hyporeg.core.solver import TikhonovProblem, refine, solve
from hyporeg.shared.metrics import fit_loglog, non_increasing_with_slack

from .noise import NoiseKind, NoiseSpec, add_noise, band_layout


logger = logging.getLogger(__name__)


def _direction(sigma: Curve | np.ndarray, n_t: int) -> np.ndarray:
    values = sigma.values if isinstance(sigma, Curve) else np.asarray(sigma, dtype=float)
    if values.shape != (n_t,):
        raise InvariantError(f"direction needs {n_t} samples, got shape {values.shape}")
    if not np.any(values):
        raise InvariantError("direction must not vanish identically")
    return values


def _step_values(s_values: Sequence[float]) -> np.ndarray:
    steps = np.asarray(s_values, dtype=float)
    if steps.size == 0 or np.any(steps <= 0) or np.any(~np.isfinite(steps)):
        raise InvariantError("step sizes must be finite and > 0")
    if np.any(np.diff(steps) >= 0):
        raise InvariantError("step sizes must be strictly descending")
    return steps


def _stepped(gamma: Curve, direction: np.ndarray, step: float) -> Curve:
    values = gamma.values + step * direction
    if np.any(values < 0) or np.any(values > gamma.grid.x_max):
        raise InvariantError(f"gamma + {step:g} sigma leaves [0, x_max]")
    return Curve(values, gamma.grid)


@dataclass(frozen=True)
class ProbeReport:
    s_values: tuple[float, ...]
    ratios: tuple[float, ...]
    predicted: tuple[float, ...]
    slope: float
    intercept: float


def probe_nondifferentiability(gamma: Curve, sigma: Curve | np.ndarray, s_values: Sequence[float]) -> ProbeReport:
    """Difference quotients r(s) = ‖F(γ + sσ) - F(γ)‖ / s.

    They blow up like sqrt(‖σ‖_L¹ / s), so the log-log slope is -1/2.
    """
    if np.any(gamma.values <= 0):
        raise InvariantError("gamma must be strictly positive")
    direction = _direction(sigma, gamma.grid.n_t)
    steps = _step_values(s_values)
    ratios = [math.sqrt(fidelity_exact(_stepped(gamma, direction, step), gamma)) / step for step in steps]
    sigma_l1 = float(signed_l1(direction, gamma.grid.h_t))
    fit = fit_loglog(steps, ratios)
    return ProbeReport(
        s_values=tuple(float(s) for s in steps),
        ratios=tuple(ratios),
        predicted=tuple(math.sqrt(sigma_l1 / step) for step in steps),
        slope=fit.slope,
        intercept=fit.intercept,
    )


@dataclass(frozen=True)
class OneSidedReport:
    s_values: tuple[float, ...]
    quotients: tuple[float, ...]
    predicted: float
    max_relative_deviation: float


def check_one_sided_derivative(gamma: Curve, sigma: Curve | np.ndarray, s_values: Sequence[float]) -> OneSidedReport:
    """Quotients misfit(γ + sσ, F(γ)) / s against the lumped norm h_t Σ|σ_i|.

    For node heights on cell boundaries the quotient equals the prediction for
    every admissible s.
    """
    direction = _direction(sigma, gamma.grid.n_t)
    steps = _step_values(s_values)
    data = apply_forward(gamma)
    quotients = [misfit(_stepped(gamma, direction, step), data) / step for step in steps]
    predicted = gamma.grid.h_t * float(np.sum(np.abs(direction)))
    deviation = max(abs(value - predicted) for value in quotients) / predicted
    return OneSidedReport(
        s_values=tuple(float(s) for s in steps),
        quotients=tuple(quotients),
        predicted=predicted,
        max_relative_deviation=deviation,
    )


@dataclass(frozen=True)
class GradientCheck:
    gradient: np.ndarray
    finite_difference: np.ndarray
    max_relative_error: float
    step: float


def check_misfit_gradient(curve: Curve, u: CylinderField, step: float | None = None) -> GradientCheck:
    """misfit_gradient against central differences of the misfit, node by node.

    The misfit is a sum of per-node terms, so moving every node at once yields
    all partial differences in one evaluation.
    """
    curve.grid.require_same(u.grid)
    grid = curve.grid
    step = 1e-6 * grid.h_x if step is None else step
    if step <= 0:
        raise InvariantError("finite-difference step must be > 0")
    table = build_cost_table(u)
    heights = curve.values
    if np.any(heights - step < 0) or np.any(heights + step > grid.x_max):
        raise InvariantError("finite-difference stencil leaves [0, x_max]")
    forward_costs = table.evaluate(heights + step)
    backward_costs = table.evaluate(heights - step)
    finite_difference = (forward_costs - backward_costs) / (2.0 * step)
    gradient = misfit_gradient(curve, u)
    scale = float(np.max(np.abs(gradient)))
    error = float(np.max(np.abs(finite_difference - gradient)))
    return GradientCheck(
        gradient=gradient,
        finite_difference=finite_difference,
        max_relative_error=error / scale if scale > 0 else error,
        step=step,
    )


@dataclass(frozen=True)
class DemoRow:
    alpha: float
    objective: float
    level: float
    spread: float
    objective_ok: bool
    constant_ok: bool
    in_band: bool


@dataclass(frozen=True)
class DemoReport:
    delta: float
    effective_delta: float
    half_width: float
    grid: PeriodicGrid
    rows: tuple[DemoRow, ...]

    @property
    def passed(self) -> bool:
        return all(row.objective_ok and row.constant_ok and row.in_band for row in self.rows)

    @property
    def distinct_levels(self) -> int:
        return len({row.level for row in self.rows})


def demo_nonuniqueness(
    delta: float,
    grid: PeriodicGrid | None = None,
    alphas: Sequence[float] = (1e-3, 1e-1, 10.0),
    *,
    n_t: int = 512,
    n_x: int = 512,
    band_rtol: float = 1e-3,
    max_workers: int = 1,
) -> DemoReport:
    """Solve the half-band data problem for several α.

    Every constant curve inside the band attains the minimal value δ², so
    different α may legitimately pick different constants.
    """
    if delta <= 0 or delta * delta >= math.pi:
        raise InvariantError(f"the band construction needs 0 < delta^2 < pi, got delta={delta}")
    if not alphas:
        raise InvariantError("demo needs at least one alpha")
    grid = grid or PeriodicGrid.band_resolving(delta, n_t, n_x, rtol=band_rtol)
    centre = grid.boundary_index(1.0)
    if centre is None:
        raise InvariantError(f"height 1 is not a cell boundary of {grid}")
    clean = apply_forward(Curve.constant(grid, float(grid.edges[centre])))
    noisy = add_noise(clean, NoiseSpec(delta=delta, kind="band", band_rtol=band_rtol))
    effective = noisy.l2_distance(clean)

    # judge levels against the band the data actually carries
    half_width = band_layout(grid, delta, band_rtol).half_width_cells * grid.h_x
    base = TikhonovProblem(noisy, float(alphas[0]))
    rows = []
    for alpha in alphas:
        report = solve(base.with_alpha(float(alpha)), max_workers=max_workers)
        values = report.minimizer.values
        spread = float(values.max() - values.min())
        level = float(values.mean())
        row = DemoRow(
            alpha=float(alpha),
            objective=report.objective,
            level=level,
            spread=spread,
            objective_ok=abs(report.objective - delta * delta) <= band_rtol * delta * delta,
            constant_ok=spread < 1e-10,
            in_band=abs(level - 1.0) <= half_width + 1e-12,
        )
        logger.info(
            "nonuniqueness alpha=%.6g objective=%.12g level=%.12g spread=%.3g",
            row.alpha,
            row.objective,
            row.level,
            row.spread,
        )
        rows.append(row)
    return DemoReport(delta=delta, effective_delta=effective, half_width=half_width, grid=grid, rows=tuple(rows))


@dataclass(frozen=True)
class ConvergenceStep:
    delta: float
    alpha: float
    h1_error: float
    l2_error: float
    objective: float


@dataclass(frozen=True)
class ConvergenceReport:
    steps: tuple[ConvergenceStep, ...]
    monotone: bool
    improved: bool
    slack: float
    improvement: float

    @property
    def reduction(self) -> float:
        """Initial over final H¹₀ error."""
        final = self.steps[-1].h1_error
        return self.steps[0].h1_error / final if final > 0 else math.inf

    @property
    def passed(self) -> bool:
        return self.monotone and self.improved


def _check_schedule(schedule: Sequence[tuple[float, float]]) -> tuple[np.ndarray, np.ndarray]:
    if len(schedule) < 2:
        raise ScheduleError("a convergence schedule needs at least two steps")
    deltas = np.array([float(d) for d, _ in schedule])
    alphas = np.array([float(a) for _, a in schedule])
    if np.any(deltas < 0) or np.any(alphas <= 0):
        raise ScheduleError("schedule needs delta >= 0 and alpha > 0")
    if np.any(np.diff(deltas) > 0):
        raise ScheduleError("schedule deltas must not increase")
    if np.any(np.diff(alphas) >= 0):
        raise ScheduleError("schedule alphas must strictly decrease")
    ratios = deltas**2 / alphas
    # strict decrease while the data are still noisy; zero ratios may repeat
    if np.any(np.diff(ratios)[deltas[:-1] > 0] >= 0):
        raise ScheduleError("schedule ratios delta^2/alpha must strictly decrease while delta > 0")
    return deltas, alphas


def check_tikreg_convergence(
    truth: CurveFamily,
    grid: PeriodicGrid,
    schedule: Sequence[tuple[float, float]],
    seed: int = 0,
    *,
    refine_sweeps: int = 0,
    level_count: int | None = None,
    slack: float = 0.2,
    improvement: float = 2.0,
    noise: NoiseKind = "gaussian",
    max_workers: int = 1,
) -> ConvergenceReport:
    """Solve along (δ_k, α_k) with δ_k → 0, α_k → 0 and δ_k²/α_k → 0.

    The run passes when the H¹₀ errors are non-increasing up to ``slack`` and
    the final error is at most the initial one divided by ``improvement``. A
    schedule that starts on clean data only has to stay within the slack.
    """
    if improvement < 1:
        raise InvariantError(f"improvement factor must be >= 1, got {improvement}")
    deltas, alphas = _check_schedule(schedule)
    curve = generate_curve(truth, grid)
    clean = apply_forward(curve)
    steps = []
    for index, (delta, alpha) in enumerate(zip(deltas, alphas)):
        spec = NoiseSpec(delta=float(delta), kind=noise, seed=seed, delta_index=index)
        data = add_noise(clean, spec, truth=curve, alpha=float(alpha))
        problem = TikhonovProblem(data, float(alpha), level_count)
        report = solve(problem, max_workers=max_workers)
        if refine_sweeps:
            report = refine(report, problem, refine_sweeps)
        steps.append(
            ConvergenceStep(
                delta=float(delta),
                alpha=float(alpha),
                h1_error=norm_h1_error(report.minimizer, curve),
                l2_error=l2_error(report.minimizer, curve),
                objective=report.objective,
            )
        )
        logger.info("convergence step delta=%.6g alpha=%.6g h1=%.6g", delta, alpha, steps[-1].h1_error)
    errors = [step.h1_error for step in steps]
    if deltas[0] > 0:
        improved = errors[-1] <= errors[0] / improvement
    else:
        improved = errors[-1] <= (1.0 + slack) * errors[0]
    return ConvergenceReport(
        steps=tuple(steps),
        monotone=non_increasing_with_slack(errors, slack),
        improved=improved,
        slack=slack,
        improvement=improvement,
    )


@dataclass(frozen=True)
class StabilityRow:
    delta: float
    objective: float
    difference: float
    bound: float


@dataclass(frozen=True)
class StabilityReport:
    reference_objective: float
    rows: tuple[StabilityRow, ...]

    @property
    def within_bound(self) -> bool:
        return all(row.difference <= row.bound * (1.0 + 1e-9) + 1e-12 for row in self.rows)


def check_stability(
    u: CylinderField,
    alpha: float,
    deltas: Sequence[float],
    seed: int = 0,
    *,
    level_count: int | None = None,
    max_workers: int = 1,
) -> StabilityReport:
    """Optimal values for data u^(k) with ‖u^(k) - u‖ = δ_k against the optimum for u.

    |T*_k - T*| ≤ (2 sqrt(max(T*_k, T*)) + δ_k) δ_k holds for the discrete model.
    """
    base = TikhonovProblem(u, alpha, level_count)
    reference = solve(base, max_workers=max_workers).objective
    rows = []
    for index, delta in enumerate(deltas):
        data = add_noise(u, NoiseSpec(delta=float(delta), seed=seed, delta_index=index))
        value = solve(TikhonovProblem(data, alpha, level_count), max_workers=max_workers).objective
        bound = (2.0 * math.sqrt(max(value, reference)) + delta) * delta
        rows.append(StabilityRow(delta=float(delta), objective=value, difference=abs(value - reference), bound=bound))
    return StabilityReport(reference_objective=reference, rows=tuple(rows))
