"""Grids, curves and the discrete norms used by the regularization estimates.

Curves are sampled at ``n_t`` equispaced angles on a circle of circumference
2π and interpreted as piecewise-linear between nodes. With that model the L¹,
L² and H¹₀ quantities below are exact integrals, not quadratures.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import hashlib
import math
from typing import Callable, Literal

import numpy as np

from .errors import BandResolutionError, GridMismatchError, InvariantError


FamilyName = Literal["constant", "sinusoid", "fourier-decay", "kink"]
FAMILY_NAMES: tuple[str, ...] = ("constant", "sinusoid", "fourier-decay", "kink")

# Fourier-decay curves are tagged H^{β-1/2-ε}; the kink sits just below H^{3/2}.
SMOOTHNESS_EPS = 0.01
_REFERENCE_SAMPLES = 4096


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class PeriodicGrid:
    n_t: int
    n_x: int
    x_max: float

    def __post_init__(self) -> None:
        if int(self.n_t) != self.n_t or self.n_t < 3:
            raise InvariantError(f"PeriodicGrid requires an integer n_t >= 3, got {self.n_t}")
        if int(self.n_x) != self.n_x or self.n_x < 2:
            raise InvariantError(f"PeriodicGrid requires an integer n_x >= 2, got {self.n_x}")
        if not math.isfinite(self.x_max) or self.x_max <= 0:
            raise InvariantError(f"PeriodicGrid requires x_max > 0, got {self.x_max}")
        object.__setattr__(self, "n_t", int(self.n_t))
        object.__setattr__(self, "n_x", int(self.n_x))
        object.__setattr__(self, "x_max", float(self.x_max))

    @property
    def h_t(self) -> float:
        return 2.0 * math.pi / self.n_t

    @property
    def h_x(self) -> float:
        return self.x_max / self.n_x

    @cached_property
    def angles(self) -> np.ndarray:
        return _readonly(np.arange(self.n_t) * self.h_t)

    @cached_property
    def edges(self) -> np.ndarray:
        """Radial cell boundaries ``x_0 = 0 < ... < x_{n_x} = x_max``."""
        return _readonly(np.linspace(0.0, self.x_max, self.n_x + 1))

    @cached_property
    def centers(self) -> np.ndarray:
        edges = self.edges
        return _readonly(0.5 * (edges[:-1] + edges[1:]))

    def levels(self, count: int | None = None) -> np.ndarray:
        """Uniform admissible heights; defaults to the cell boundaries."""
        if count is None or count == self.n_x + 1:
            return self.edges
        if count < 2:
            raise InvariantError(f"level count must be >= 2, got {count}")
        return _readonly(np.linspace(0.0, self.x_max, int(count)))

    def boundary_index(self, height: float, rtol: float = 1e-9) -> int | None:
        """Index of the cell boundary equal to ``height``, if there is one."""
        position = height / self.h_x
        index = int(round(position))
        if 0 <= index <= self.n_x and abs(position - index) <= rtol * max(1.0, abs(position)):
            return index
        return None

    def require_same(self, other: PeriodicGrid) -> None:
        if self != other:
            raise GridMismatchError(f"grid mismatch: {self} vs {other}")

    @classmethod
    def band_resolving(
        cls,
        delta: float,
        n_t: int,
        n_x: int,
        rtol: float = 1e-3,
        headroom: float = 1.1,
    ) -> PeriodicGrid:
        """Pick x_max so that height 1 and the half-width δ²/π sit on cell boundaries.

        Boundaries are k/m for an integer number m of cells per unit height; the
        finest m whose band width is within ``rtol`` of a whole number of cells,
        rounded towards the inside of the band, wins.
        """
        if delta <= 0 or delta * delta >= math.pi:
            raise InvariantError(f"band construction requires 0 < delta and delta^2 < pi, got {delta}")
        half_width = delta * delta / math.pi
        m_max = int(math.floor(n_x / (headroom * (1.0 + half_width))))
        m_min = max(1, int(math.ceil(1.0 / half_width)))
        for m in range(m_max, m_min - 1, -1):
            cells = half_width * m
            whole = round(cells)
            if whole >= 1 and whole <= cells and cells - whole <= rtol * cells:
                return cls(n_t=n_t, n_x=n_x, x_max=n_x / m)
        raise BandResolutionError(
            f"no grid with n_x={n_x} resolves the band half-width {half_width:.6g} within rtol={rtol}"
        )


@dataclass(frozen=True, eq=False)
class Curve:
    values: np.ndarray
    grid: PeriodicGrid

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_t,):
            raise InvariantError(f"Curve needs {self.grid.n_t} samples, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvariantError("Curve samples must be finite")
        if np.any(values < 0.0):
            raise InvariantError(f"Curve samples must be >= 0 (min {values.min():.6g})")
        if np.any(values > self.grid.x_max):
            raise InvariantError(
                f"Curve samples must be <= x_max={self.grid.x_max:.6g} (max {values.max():.6g})"
            )
        object.__setattr__(self, "values", _readonly(values))

    @classmethod
    def constant(cls, grid: PeriodicGrid, level: float) -> Curve:
        return cls(np.full(grid.n_t, float(level)), grid)

    @classmethod
    def from_function(cls, grid: PeriodicGrid, fn: Callable[[np.ndarray], np.ndarray]) -> Curve:
        return cls(np.asarray(fn(grid.angles), dtype=float), grid)

    def shifted(self, k: int) -> Curve:
        return Curve(np.roll(self.values, k), self.grid)

    def with_values(self, values: np.ndarray) -> Curve:
        return Curve(values, self.grid)

    def digest(self) -> str:
        """sha256 of the 12-significant-digit samples (regression pinning)."""
        text = ",".join(f"{v:.12g}" for v in self.values)
        return hashlib.sha256(text.encode("ascii")).hexdigest()


@dataclass(frozen=True, eq=False)
class CylinderField:
    cells: np.ndarray
    grid: PeriodicGrid

    def __post_init__(self) -> None:
        cells = np.array(self.cells, dtype=float)
        expected = (self.grid.n_t, self.grid.n_x)
        if cells.shape != expected:
            raise InvariantError(f"CylinderField needs shape {expected}, got {cells.shape}")
        if not np.all(np.isfinite(cells)):
            raise InvariantError("CylinderField entries must be finite")
        object.__setattr__(self, "cells", _readonly(cells))

    def l2_norm(self) -> float:
        return math.sqrt(self.grid.h_t * self.grid.h_x * float(np.sum(self.cells**2)))

    def l2_distance(self, other: CylinderField) -> float:
        self.grid.require_same(other.grid)
        diff = self.cells - other.cells
        return math.sqrt(self.grid.h_t * self.grid.h_x * float(np.sum(diff**2)))

    def shifted(self, k: int) -> CylinderField:
        return CylinderField(np.roll(self.cells, k, axis=0), self.grid)


def _as_values(curve: Curve | np.ndarray) -> np.ndarray:
    return curve.values if isinstance(curve, Curve) else np.asarray(curve, dtype=float)


def signed_l1(values: np.ndarray, h_t: float) -> float | np.ndarray:
    """Exact L¹ norm of a signed piecewise-linear periodic sample vector.

    Works on the last axis, so a batch of vectors gives a batch of norms.
    """
    v0 = np.asarray(values, dtype=float)
    v1 = np.roll(v0, -1, axis=-1)
    a0 = np.abs(v0)
    a1 = np.abs(v1)
    same_sign = v0 * v1 >= 0.0
    crossing_denominator = np.where(same_sign, 1.0, a0 + a1)
    segment = np.where(same_sign, 0.5 * (a0 + a1), (v0**2 + v1**2) / (2.0 * crossing_denominator))
    return h_t * np.sum(segment, axis=-1)


def signed_l2(values: np.ndarray, h_t: float) -> float | np.ndarray:
    v0 = np.asarray(values, dtype=float)
    v1 = np.roll(v0, -1, axis=-1)
    return np.sqrt(h_t / 3.0 * np.sum(v0**2 + v0 * v1 + v1**2, axis=-1))


def seminorm_values(values: np.ndarray, h_t: float) -> float | np.ndarray:
    """Squared H¹₀ seminorm of the interpolant, batched over the last axis."""
    v = np.asarray(values, dtype=float)
    return np.sum((np.roll(v, -1, axis=-1) - v) ** 2, axis=-1) / h_t


def norm_l1(curve: Curve) -> float:
    return curve.grid.h_t * float(np.sum(curve.values))


def norm_l2(curve: Curve) -> float:
    return float(signed_l2(curve.values, curve.grid.h_t))


def seminorm_h1(curve: Curve) -> float:
    return float(seminorm_values(curve.values, curve.grid.h_t))


def norm_h1_error(a: Curve, b: Curve) -> float:
    a.grid.require_same(b.grid)
    return math.sqrt(float(seminorm_values(a.values - b.values, a.grid.h_t)))


def l2_error(a: Curve, b: Curve) -> float:
    a.grid.require_same(b.grid)
    return float(signed_l2(a.values - b.values, a.grid.h_t))


def discrete_curvature_bound(curve: Curve | np.ndarray, h_t: float | None = None) -> float:
    """max_i |γ_{i+1} - 2γ_i + γ_{i-1}| / h_t²."""
    values = _as_values(curve)
    step = curve.grid.h_t if isinstance(curve, Curve) else h_t
    if step is None:
        raise InvariantError("h_t is required for raw sample vectors")
    second = np.roll(values, -1) - 2.0 * values + np.roll(values, 1)
    return float(np.max(np.abs(second))) / step**2


@dataclass(frozen=True)
class CurveFamily:
    name: FamilyName
    offset: float = 1.0
    amplitude: float = 0.5
    frequency: int = 1
    beta: float = 3.0
    n_modes: int = 64
    margin: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.name not in FAMILY_NAMES:
            raise InvariantError(f"unknown curve family {self.name!r}; expected one of {FAMILY_NAMES}")
        if self.amplitude < 0:
            raise InvariantError("family amplitude must be >= 0")
        if int(self.frequency) != self.frequency or self.frequency < 1:
            raise InvariantError("family frequency must be a positive integer")
        if self.beta <= 0.5:
            raise InvariantError("fourier-decay exponent beta must exceed 1/2")
        if self.n_modes < 1:
            raise InvariantError("fourier-decay needs at least one mode")
        if self.margin <= 0:
            raise InvariantError("family margin must be > 0")

    def smoothness(self) -> tuple[float, float]:
        """Nominal (s, q) tag; drives expected-rate bookkeeping only."""
        if self.name in ("constant", "sinusoid"):
            return 2.0, math.inf
        if self.name == "fourier-decay":
            return min(2.0, self.beta - 0.5 - SMOOTHNESS_EPS), 2.0
        return 1.5 - SMOOTHNESS_EPS, 2.0

    @cached_property
    def _modes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        rng = np.random.default_rng(self.seed)
        cos_coeffs = rng.standard_normal(self.n_modes)
        sin_coeffs = rng.standard_normal(self.n_modes)
        k = np.arange(1, self.n_modes + 1, dtype=float)
        return k, cos_coeffs * k ** (-self.beta), sin_coeffs * k ** (-self.beta)

    def _fourier_raw(self, t: np.ndarray, derivative: int = 0) -> np.ndarray:
        k, a, b = self._modes
        phase = np.outer(t, k)
        if derivative == 0:
            return np.cos(phase) @ a + np.sin(phase) @ b
        # second derivative
        return -(np.cos(phase) @ (a * k**2) + np.sin(phase) @ (b * k**2))

    @cached_property
    def _fourier_shape(self) -> tuple[float, float]:
        """(scale, offset) fixed on a reference grid so curves do not depend on n_t."""
        reference = np.arange(_REFERENCE_SAMPLES) * (2.0 * math.pi / _REFERENCE_SAMPLES)
        raw = self._fourier_raw(reference)
        peak = float(np.max(np.abs(raw)))
        scale = self.amplitude / peak if peak > 0 else 0.0
        low = self.offset + scale * float(raw.min())
        shift = self.offset + max(0.0, self.margin - low)
        return scale, shift

    def sample(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.name == "constant":
            return np.full(t.shape, float(self.offset))
        if self.name == "sinusoid":
            return self.offset + self.amplitude * np.sin(self.frequency * t)
        if self.name == "kink":
            return self.offset + self.amplitude * (2.0 / math.pi) * np.arcsin(np.sin(self.frequency * t))
        scale, shift = self._fourier_shape
        return shift + scale * self._fourier_raw(t)

    def curvature_sup(self) -> float:
        """Closed-form sup|γ̈| of the family (fourier-decay on the reference grid)."""
        if self.name == "constant":
            return 0.0
        if self.name == "sinusoid":
            return self.amplitude * self.frequency**2
        if self.name == "kink":
            return math.inf
        scale, _ = self._fourier_shape
        reference = np.arange(_REFERENCE_SAMPLES) * (2.0 * math.pi / _REFERENCE_SAMPLES)
        return scale * float(np.max(np.abs(self._fourier_raw(reference, derivative=2))))


def generate_curve(family: CurveFamily, grid: PeriodicGrid) -> Curve:
    values = family.sample(grid.angles)
    try:
        return Curve(values, grid)
    except InvariantError as exc:
        raise InvariantError(f"family {family.name!r} does not fit the cylinder: {exc}") from exc
