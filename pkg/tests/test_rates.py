"""Unit tests for `hyporeg.analysis.rates`.

The full convergence-rate experiments are far too slow for unit tests; these
tests run a two-delta, two-repetition experiment on a 16 × 32 grid and check
the report's bookkeeping: cell layout, reproducibility across worker counts,
the clean-data floor and the fit window. The slopes themselves are checked
in the ``slow`` presets.
"""

import math

import pytest

from hyporeg.analysis.rates import (
    RateCell,
    RateExperimentConfig,
    phi_bound,
    run_rate_experiment,
    summarize,
)
from hyporeg.core.errors import InvariantError
from hyporeg.core.geometry import CurveFamily, PeriodicGrid


def _config(**overrides) -> RateExperimentConfig:
    base = dict(
        truth=CurveFamily("sinusoid"),
        grid=PeriodicGrid(16, 32, 2.0),
        deltas=(0.2, 0.1),
        repetitions=2,
        seed=3,
        refine_sweeps=5,
    )
    base.update(overrides)
    return RateExperimentConfig(**base)


@pytest.mark.p0
def test_config_validation():
    with pytest.raises(InvariantError):
        _config(deltas=(0.1, 0.2))
    with pytest.raises(InvariantError):
        _config(deltas=())
    with pytest.raises(InvariantError):
        _config(noise="band")
    with pytest.raises(InvariantError):
        _config(repetitions=0)
    with pytest.raises(InvariantError):
        _config(smoothness=(2.5, math.inf))
    with pytest.raises(InvariantError):
        _config(resolve_cells=-1.0)


@pytest.mark.p0
def test_power_rule_uses_the_nominal_tag():
    """fourier-decay with β = 3 is tagged (2, 2), so α = α₀ δ."""
    cfg = _config(truth=CurveFamily("fourier-decay", beta=3.0), rule="power")

    assert cfg.nominal == (2.0, 2.0)
    assert cfg.alpha_exponent == pytest.approx(1.0)
    assert cfg.alpha_for(0.1) == pytest.approx(0.005)
    assert _config(rule="power", exponent=2.0).alpha_for(0.1) == pytest.approx(0.0005)


@pytest.mark.p0
@pytest.mark.bvt
def test_rate_experiment_report_layout():
    """One cell per (delta, rep), deltas in the given order, summaries per delta.

    Expected: the sinusoid's tag (2, ∞) predicts slope 1; the fit window is a
    subset of the deltas; the slope is NaN exactly when the fit is
    floor-dominated.
    """
    report = run_rate_experiment(_config())

    assert [(c.delta, c.rep) for c in report.cells] == [(0.2, 0), (0.2, 1), (0.1, 0), (0.1, 1)]
    assert all(c.alpha == 0.05 for c in report.cells)
    assert [row.delta for row in report.summary] == [0.2, 0.1]
    assert report.predicted_exponent == 1.0
    assert report.smoothness == (2.0, math.inf)
    assert set(report.fit_window) <= {0.2, 0.1}
    assert math.isnan(report.slope) == report.floor_dominated
    assert report.floor_h1 >= 0.0
    for row in report.summary:
        assert row.max_h1 >= row.mean_h1 >= 0.0
        assert row.bound_h1 > 0.0


@pytest.mark.p0
def test_rate_experiment_is_reproducible_across_workers():
    serial = run_rate_experiment(_config())
    threaded = run_rate_experiment(_config(max_workers=3))

    assert serial.cells == threaded.cells


@pytest.mark.p0
def test_summarize_window_and_bound():
    """Deltas whose mean error is within 5× the floor drop out of the fit."""
    cells = [
        RateCell(0.2, 0.05, 0, 0.4, 0.1, 1.0, 0.5, 0.5),
        RateCell(0.2, 0.05, 1, 0.2, 0.1, 1.0, 0.5, 0.5),
        RateCell(0.1, 0.05, 0, 0.04, 0.01, 1.0, 0.5, 0.5),
    ]

    rows, window = summarize(cells, (0.2, 0.1), floor_h1=0.01, bound=lambda d, a: d / a)

    assert rows[0].mean_h1 == pytest.approx(0.3)
    assert rows[0].max_h1 == 0.4
    assert rows[1].bound_h1 == pytest.approx(2.0)
    assert window == (0.2,)


@pytest.mark.p0
def test_resolution_cutoff_drops_unresolved_deltas():
    """Deltas whose perturbation δ²/4 spans fewer than resolve_cells radial cells leave the window.

    Scenario: 2048 cells over [0, 2] with resolve_cells = 2, so the cutoff is
    2 sqrt(2 h_x) ≈ 0.088; every delta clears the error floor.

    Expected: 1/4 and 1/8 stay in the window and 1/16 drops out even though
    its error is far above the floor; without the cutoff all three are kept.
    """
    cfg = _config(grid=PeriodicGrid(16, 2048, 2.0), deltas=(0.25, 0.125, 0.0625), resolve_cells=2.0)
    cells = [
        RateCell(0.25, 0.05, 0, 0.64, 0.1, 1.0, 0.5, 0.5),
        RateCell(0.125, 0.05, 0, 0.32, 0.05, 1.0, 0.5, 0.5),
        RateCell(0.0625, 0.05, 0, 0.3, 0.05, 1.0, 0.5, 0.5),
    ]

    assert cfg.min_delta == pytest.approx(2.0 * math.sqrt(2.0 * 2.0 / 2048))
    assert _config().min_delta == 0.0

    _, window = summarize(cells, cfg.deltas, floor_h1=0.01, min_delta=cfg.min_delta)
    _, unrestricted = summarize(cells, cfg.deltas, floor_h1=0.01)

    assert window == (0.25, 0.125)
    assert unrestricted == (0.25, 0.125, 0.0625)


@pytest.mark.p0
def test_phi_bound():
    """sqrt((δ²/α + 2 c₂ δ²)/c₁) while α ≤ 1/(2 c₂); NaN beyond."""
    assert phi_bound(0.1, 0.01, 1.0, 1.0) == pytest.approx(math.sqrt(1.0 + 0.02))
    assert math.isnan(phi_bound(0.1, 1.0, 1.0, 1.0))
    with pytest.raises(InvariantError):
        phi_bound(0.1, 0.01, 0.0, 1.0)


@pytest.mark.slow
def test_smooth_truth_rate_preset():
    """Constant α on the sinusoid gives a linear H¹₀ rate.

    Scenario: sinusoid truth 1 + 0.5 sin t, constant α = 0.05, wave noise,
    deltas 2^-2 … 2^-7, three repetitions, 256 × 2048 cells over [0, 2].
    resolve_cells = 2 keeps only deltas whose perturbation δ²/4 spans at
    least two radial cells, which leaves 1/4 and 1/8 in the window.

    Expected: the clean-data floor stays far below the noisiest errors, the
    fit is not floor-dominated, the slope lies in [0.85, 1.15] and the mean
    error decreases monotonically.

    Why: the minimizer follows the perturbed curve, whose H¹ distance to the
    truth is proportional to δ under a constant α.
    """
    cfg = RateExperimentConfig(
        truth=CurveFamily("sinusoid"),
        grid=PeriodicGrid(256, 2048, 2.0),
        deltas=tuple(2.0**-k for k in range(2, 8)),
        alpha0=0.05,
        repetitions=3,
        noise="wave",
        resolve_cells=2.0,
        max_workers=4,
    )

    report = run_rate_experiment(cfg)

    assert not report.floor_dominated
    assert report.fit_window == (0.25, 0.125)
    assert report.summary[0].mean_h1 > 5.0 * report.floor_h1
    assert 0.85 <= report.slope <= 1.15
    assert report.monotone


@pytest.mark.slow
def test_rougher_truth_converges_more_slowly():
    """Under the power rule the rougher fourier-decay truth has the smaller slope.

    Scenario: fourier-decay truths with β = 2, 2.5 and 3 (16 modes, amplitude
    0.05), α = 0.18 δ^e with e from each truth's smoothness tag, wave noise,
    deltas 2^-2, 2^-2.5, 2^-3, 1024 × 4096 cells over [0, 1.25].

    Expected: every run keeps all three deltas above the floor and decreases
    monotonically; β = 2 (predicted 0.245) fits a strictly smaller positive
    slope than β = 3 (predicted 0.5); β = 2.5 and β = 3 both reach 0.3.

    Why: the β = 2 tag asks for a faster-shrinking α, so each halving of δ
    buys less accuracy.
    """
    deltas = (0.25, 0.25 / math.sqrt(2.0), 0.125)
    slopes = {}
    for beta in (2.0, 2.5, 3.0):
        cfg = RateExperimentConfig(
            truth=CurveFamily("fourier-decay", amplitude=0.05, beta=beta, n_modes=16),
            grid=PeriodicGrid(1024, 4096, 1.25),
            deltas=deltas,
            rule="power",
            alpha0=0.18,
            repetitions=2,
            noise="wave",
            fast_cycle=True,
            max_workers=4,
        )

        report = run_rate_experiment(cfg)

        assert not report.floor_dominated, beta
        assert report.fit_window == deltas, beta
        assert report.monotone, beta
        slopes[beta] = report.slope

    assert 0.0 < slopes[2.0] < slopes[3.0]
    assert slopes[2.5] >= 0.3
    assert slopes[3.0] >= 0.3
