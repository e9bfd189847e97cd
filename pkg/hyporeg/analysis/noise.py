"""Noisy data u^δ with a pinned discrete L² distance to the clean field."""

from __future__ import annotations

from dataclasses import dataclass
import logging
import math
from typing import Literal

import numpy as np
from scipy.optimize import brentq

from hyporeg.core.errors import BandResolutionError, InvariantError
from hyporeg.core.forward import apply_forward
from hyporeg.core.geometry import Curve, CylinderField, PeriodicGrid, discrete_curvature_bound


logger = logging.getLogger(__name__)

NoiseKind = Literal["gaussian", "band", "shift", "wave"]
NOISE_KINDS: tuple[str, ...] = ("gaussian", "band", "shift", "wave")


@dataclass(frozen=True)
class NoiseSpec:
    delta: float
    kind: NoiseKind = "gaussian"
    seed: int = 0
    delta_index: int = 0
    rep: int = 0
    band_rtol: float = 1e-3

    def __post_init__(self) -> None:
        if not math.isfinite(self.delta) or self.delta < 0:
            raise InvariantError(f"noise level must be finite and >= 0, got {self.delta}")
        if self.kind not in NOISE_KINDS:
            raise InvariantError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if self.band_rtol <= 0:
            raise InvariantError("band_rtol must be > 0")

    def rng(self) -> np.random.Generator:
        """Stream owned by one (seed, delta index, repetition) cell."""
        return np.random.default_rng(np.random.SeedSequence([self.seed, self.delta_index, self.rep]))


@dataclass(frozen=True)
class BandLayout:
    """Cell indices of the half-valued band around height 1."""

    lower: int
    upper: int
    centre: int
    effective_delta: float

    @property
    def half_width_cells(self) -> int:
        return self.centre - self.lower


def band_layout(grid: PeriodicGrid, delta: float, rtol: float = 1e-3) -> BandLayout:
    """Snap the band |x - 1| ≤ δ²/π to cell boundaries, or refuse."""
    if delta <= 0:
        raise InvariantError(f"band noise needs delta > 0, got {delta}")
    if delta * delta >= math.pi:
        raise InvariantError(f"band noise needs delta^2 < pi, got delta={delta}")
    centre = grid.boundary_index(1.0)
    if centre is None:
        raise BandResolutionError(f"height 1 is not a cell boundary of {grid}")
    half_width = delta * delta / math.pi
    # whole cells inside the band, so the snapped band never exceeds δ²/π
    cells = int(math.floor(half_width / grid.h_x + 1e-9))
    if cells < 1:
        raise BandResolutionError(
            f"band half-width {half_width:.6g} is under-resolved by h_x={grid.h_x:.6g}"
        )
    lower, upper = centre - cells, centre + cells
    if lower < 0 or upper > grid.n_x:
        raise BandResolutionError("band does not fit inside [0, x_max]")
    effective_sq = math.pi * cells * grid.h_x
    if abs(effective_sq - delta * delta) > rtol * delta * delta:
        raise BandResolutionError(
            f"snapped band gives delta^2={effective_sq:.6g}, target {delta * delta:.6g} (rtol {rtol})"
        )
    return BandLayout(lower=lower, upper=upper, centre=centre, effective_delta=math.sqrt(effective_sq))


def band_field(grid: PeriodicGrid, layout: BandLayout) -> CylinderField:
    cells = np.zeros((grid.n_t, grid.n_x))
    cells[:, : layout.lower] = 1.0
    cells[:, layout.lower : layout.upper] = 0.5
    return CylinderField(cells, grid)


def _gaussian(u: CylinderField, spec: NoiseSpec) -> CylinderField:
    grid = u.grid
    noise = spec.rng().standard_normal((grid.n_t, grid.n_x))
    size = math.sqrt(grid.h_t * grid.h_x * float(np.sum(noise**2)))
    return CylinderField(u.cells + noise * (spec.delta / size), grid)


def _band(u: CylinderField, spec: NoiseSpec) -> CylinderField:
    grid = u.grid
    layout = band_layout(grid, spec.delta, spec.band_rtol)
    clean = np.zeros((grid.n_t, grid.n_x))
    clean[:, : layout.centre] = 1.0
    if not np.allclose(u.cells, clean, rtol=0.0, atol=1e-9):
        raise BandResolutionError("band noise needs the forward image of the constant curve at height 1")
    return band_field(grid, layout)


def shift_frequency(alpha: float, amplitude: float, curvature: float, n_t: int) -> int:
    """Largest k with 2 α a k² ≤ 1 - 2 α sup|γ̈|, capped at n_t/4."""
    budget = 1.0 - 2.0 * alpha * curvature
    if budget <= 0:
        raise InvariantError(f"shift noise needs alpha < 1/(2 sup|curvature|); alpha={alpha}, curvature={curvature}")
    if amplitude <= 0:
        return 1
    k = int(math.floor(math.sqrt(budget / (2.0 * alpha * amplitude))))
    return max(1, min(k, n_t // 4))


def _shift(u: CylinderField, spec: NoiseSpec, truth: Curve | None, alpha: float | None) -> CylinderField:
    if truth is None or alpha is None:
        raise InvariantError("shift noise needs the true curve and alpha")
    grid = u.grid
    grid.require_same(truth.grid)
    phase = float(spec.rng().uniform(0.0, 2.0 * math.pi))
    curvature = discrete_curvature_bound(truth)
    # ‖F(γ+η) - F(γ)‖² = ‖η‖_L¹ and ∫|sin kt| = 4
    k = shift_frequency(alpha, spec.delta**2 / 4.0, curvature, grid.n_t)
    wave = np.sin(k * grid.angles + phase)
    room = np.where(wave > 0, (grid.x_max - truth.values) / np.maximum(wave, 1e-300), np.inf)
    room = np.minimum(room, np.where(wave < 0, truth.values / np.maximum(-wave, 1e-300), np.inf))
    a_max = float(np.min(room))

    def gap(a: float) -> float:
        shifted = Curve(np.clip(truth.values + a * wave, 0.0, grid.x_max), grid)
        return apply_forward(shifted).l2_distance(u) - spec.delta

    if spec.kind == "wave":
        # continuum amplitude: the discrete distance is at most δ and tends to δ as h_x -> 0
        amplitude = spec.delta**2 / 4.0
        if amplitude > a_max:
            raise InvariantError(f"wave noise of level {spec.delta} does not fit inside the cylinder")
    else:
        if a_max <= 0 or gap(a_max) < 0:
            raise InvariantError(f"shift noise of level {spec.delta} does not fit inside the cylinder")
        amplitude = brentq(gap, 0.0, a_max, xtol=1e-14, rtol=1e-13, maxiter=200)
    logger.debug("%s noise delta=%.6g k=%d amplitude=%.6g", spec.kind, spec.delta, k, amplitude)
    shifted = Curve(np.clip(truth.values + amplitude * wave, 0.0, grid.x_max), grid)
    return apply_forward(shifted)


def add_noise(
    u: CylinderField,
    spec: NoiseSpec,
    *,
    truth: Curve | None = None,
    alpha: float | None = None,
) -> CylinderField:
    """u^δ with ‖u^δ - u‖ = δ in the discrete L² norm.

    gaussian: seeded per-cell noise rescaled to δ. band: the three-zone field
    with value 1/2 on |x - 1| ≤ δ²/π (u must be the image of γ ≡ 1). shift: the
    image of γ† + a sin(kt + φ) with a calibrated to δ (needs ``truth`` and
    ``alpha``). wave: the same image with a = δ²/4, so ‖u^δ - u‖ ≤ δ with
    equality in the limit h_x -> 0; rate studies use it because the
    perturbation stays proportional to δ² on coarse grids.
    """
    if spec.delta == 0:
        return u
    if spec.kind == "gaussian":
        return _gaussian(u, spec)
    if spec.kind == "band":
        return _band(u, spec)
    return _shift(u, spec, truth, alpha)
