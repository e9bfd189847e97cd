"""Shared pytest fixtures for the hyporeg unit tests.

Fixtures defined here are auto-discovered by pytest without per-file imports.
Keep them small: every fixture grid is sized so the exact cyclic solver runs
in milliseconds once the compiled kernels are cached.
"""

from __future__ import annotations

import os

import pytest

from hyporeg.analysis.noise import NoiseSpec, add_noise
from hyporeg.core.forward import apply_forward
from hyporeg.core.geometry import Curve, CurveFamily, CylinderField, PeriodicGrid, generate_curve


@pytest.fixture
def small_grid() -> PeriodicGrid:
    """16 angles by 32 radial cells on [0, 2]; height 1 is boundary 16."""
    return PeriodicGrid(n_t=16, n_x=32, x_max=2.0)


@pytest.fixture
def sinusoid(small_grid: PeriodicGrid) -> Curve:
    """1 + 0.5 sin t sampled on ``small_grid``."""
    return generate_curve(CurveFamily("sinusoid"), small_grid)


@pytest.fixture
def noisy_field(sinusoid: Curve) -> CylinderField:
    """Forward image of ``sinusoid`` with Gaussian noise of level 0.1."""
    return add_noise(apply_forward(sinusoid), NoiseSpec(delta=0.1, seed=7))


@pytest.fixture
def clean_env(monkeypatch):
    """Drop every ``HYPOREG_*`` variable so settings fall back to defaults."""
    for name in list(os.environ):
        if name.startswith("HYPOREG_"):
            monkeypatch.delenv(name, raising=False)
    return monkeypatch
