"""``python -m hyporeg`` entry point."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path
import sys
from typing import Callable, Sequence

import numpy as np

from hyporeg import __version__
from hyporeg.analysis.inequality import verify_variational_inequality
from hyporeg.analysis.probes import demo_nonuniqueness, probe_nondifferentiability
from hyporeg.analysis.rates import RateExperimentConfig, run_rate_experiment
from hyporeg.core.errors import ConfigError, InvariantError, NumericalError
from hyporeg.core.forward import apply_forward
from hyporeg.core.geometry import CurveFamily, PeriodicGrid, generate_curve
from hyporeg.core.solver import TikhonovProblem, refine, solve
from hyporeg.shared.text import format_float, parse_float

from . import plots
from .config import resolve_config
from .models import DemoConfig, ForwardConfig, ProbeConfig, RatesConfig, RunConfig, SolveConfig, VerifyConfig
from .settings import get_settings
from .storage import read_curve_csv, read_field_csv, write_csv, write_curve_csv, write_field_csv, write_manifest


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _grid(cfg: RunConfig) -> PeriodicGrid:
    return PeriodicGrid(n_t=cfg.grid_nt, n_x=cfg.grid_nx, x_max=cfg.xmax)


def _family(cfg: ForwardConfig | RatesConfig | VerifyConfig | ProbeConfig) -> CurveFamily:
    return CurveFamily(
        name=cfg.family,
        offset=cfg.offset,
        amplitude=cfg.amplitude,
        frequency=cfg.frequency,
        beta=cfg.beta,
        n_modes=cfg.modes,
        margin=cfg.margin,
        seed=cfg.family_seed,
    )


def cmd_forward(cfg: ForwardConfig) -> int:
    if cfg.curve:
        curve = read_curve_csv(cfg.curve, cfg.grid_nx, cfg.xmax)
    else:
        curve = generate_curve(_family(cfg), _grid(cfg))
    field = apply_forward(curve, sampling=cfg.sampling)
    out = Path(cfg.out)
    write_field_csv(out / "field.csv", field)
    write_curve_csv(out / "curve.csv", curve)
    if cfg.svg:
        plots.plot_field(out / "forward.svg", field, [(curve, "curve")])
    return EXIT_OK


def cmd_solve(cfg: SolveConfig) -> int:
    data = read_field_csv(cfg.data)
    problem = TikhonovProblem(data, cfg.alpha, cfg.levels)
    report = solve(problem, fast_cycle=cfg.fast_cycle, max_workers=cfg.workers)
    if cfg.refine_sweeps:
        report = refine(report, problem, cfg.refine_sweeps)
    out = Path(cfg.out)
    write_csv(
        out / "solve_report.csv",
        ("objective", "misfit", "regularizer", "alpha", "restarts_used", "refined", "cycle_mode", "level_count"),
        [
            (
                report.objective,
                report.misfit_part,
                report.regularizer_part,
                report.alpha,
                report.restarts_used,
                report.refined,
                report.cycle_mode,
                problem.levels.size,
            )
        ],
    )
    write_curve_csv(out / "minimizer.csv", report.minimizer)
    if cfg.svg:
        plots.plot_field(out / "solve.svg", data, [(report.minimizer, "minimizer")])
    print(f"objective={format_float(report.objective)}")
    return EXIT_OK


def cmd_rates(cfg: RatesConfig) -> int:
    experiment = RateExperimentConfig(
        truth=_family(cfg),
        grid=_grid(cfg),
        deltas=tuple(cfg.deltas),
        rule=cfg.rule,
        alpha0=cfg.alpha0,
        exponent=cfg.exponent,
        smoothness=(cfg.s, cfg.q) if cfg.s is not None and cfg.q is not None else None,
        repetitions=cfg.reps,
        seed=cfg.seed,
        noise=cfg.noise,
        refine_sweeps=cfg.refine_sweeps,
        level_count=cfg.levels,
        resolve_cells=cfg.resolve_cells,
        fast_cycle=cfg.fast_cycle,
        max_workers=cfg.workers,
    )
    report = run_rate_experiment(experiment)
    out = Path(cfg.out)
    write_csv(
        out / "rates.csv",
        ("delta", "alpha", "rep", "h1_error", "l2_error", "objective", "misfit", "regularizer"),
        [
            (c.delta, c.alpha, c.rep, c.h1_error, c.l2_error, c.objective, c.misfit, c.regularizer)
            for c in report.cells
        ],
    )
    rows: list[tuple] = [(r.delta, r.mean_h1, r.max_h1, r.mean_l2) for r in report.summary]
    rows.append(("slope", "intercept", "residual", "predicted_exponent"))
    rows.append((report.slope, report.intercept, report.residual, report.predicted_exponent))
    write_csv(out / "rates_summary.csv", ("delta", "mean_h1", "max_h1", "mean_l2"), rows)
    write_csv(
        out / "rates_fit.csv",
        ("key", "value"),
        [
            ("slope", report.slope),
            ("predicted_exponent", report.predicted_exponent),
            ("s", report.smoothness[0]),
            ("q", report.smoothness[1]),
            ("floor_h1", report.floor_h1),
            ("floor_l2", report.floor_l2),
            ("fit_window", ";".join(format_float(d) for d in report.fit_window)),
            ("floor_dominated", report.floor_dominated),
            ("monotone", report.monotone),
        ],
    )
    if cfg.svg:
        plots.plot_rates(out / "rates.svg", report)
    print(f"slope={format_float(report.slope)} predicted={format_float(report.predicted_exponent)}")
    return EXIT_OK


def cmd_verify(cfg: VerifyConfig) -> int:
    family = _family(cfg)
    truth = generate_curve(family, _grid(cfg))
    constants = None
    if cfg.c1 is not None and cfg.c2 is not None:
        constants = (cfg.c1, cfg.c2, cfg.c3 or 0.0)
    curvature = family.curvature_sup()
    report = verify_variational_inequality(
        truth,
        (cfg.s, cfg.q),
        constants,
        cfg.trials,
        cfg.seed,
        mode="empirical" if cfg.fit_constants else None,
        curvature=curvature if np.isfinite(curvature) else None,
        magnitudes=(cfg.min_magnitude, cfg.max_magnitude),
    )
    out = Path(cfg.out)
    write_csv(
        out / "verify.csv",
        ("index", "kind", "magnitude", "lhs", "rhs", "margin", "fidelity"),
        [(t.index, t.kind, t.magnitude, t.lhs, t.rhs, t.margin, t.fidelity) for t in report.trials],
    )
    c1, c2, c3 = report.constants
    write_csv(
        out / "verify_summary.csv",
        ("mode", "c1", "c2", "c3", "s", "q", "trials", "worst_margin", "violations", "max_feasible_c1"),
        [
            (
                report.mode,
                c1,
                c2,
                c3,
                report.smoothness[0],
                report.smoothness[1],
                len(report.trials),
                report.worst_margin,
                report.violations,
                report.max_feasible_c1,
            )
        ],
    )
    if report.violations:
        logger.warning("%d of %d trials violate the inequality", report.violations, len(report.trials))
    print(f"violations={report.violations} worst_margin={format_float(report.worst_margin)}")
    return EXIT_OK


def cmd_probe(cfg: ProbeConfig) -> int:
    gamma = generate_curve(_family(cfg), _grid(cfg))
    sigma = np.full(cfg.grid_nt, cfg.sigma)
    report = probe_nondifferentiability(gamma, sigma, cfg.svalues)
    rows: list[tuple] = list(zip(report.s_values, report.ratios, report.predicted))
    rows.append(("slope", "intercept", ""))
    rows.append((report.slope, report.intercept, ""))
    write_csv(Path(cfg.out) / "probe.csv", ("s", "ratio", "predicted"), rows)
    print(f"slope={format_float(report.slope)}")
    return EXIT_OK


def cmd_demo_nonunique(cfg: DemoConfig) -> int:
    grid = PeriodicGrid(cfg.grid_nt, cfg.grid_nx, cfg.xmax) if cfg.xmax is not None else None
    report = demo_nonuniqueness(
        cfg.delta,
        grid,
        cfg.alphas,
        n_t=cfg.grid_nt,
        n_x=cfg.grid_nx,
        band_rtol=cfg.band_rtol,
        max_workers=cfg.workers,
    )
    write_csv(
        Path(cfg.out) / "demo.csv",
        ("alpha", "objective", "level", "spread", "objective_ok", "constant_ok", "in_band"),
        [(r.alpha, r.objective, r.level, r.spread, r.objective_ok, r.constant_ok, r.in_band) for r in report.rows],
    )
    print(f"delta^2={format_float(cfg.delta**2)} distinct_levels={report.distinct_levels} passed={report.passed}")
    if not report.passed:
        raise NumericalError("non-uniqueness demo: at least one solve missed the band checks")
    return EXIT_OK


COMMANDS: dict[str, Callable] = {
    "forward": cmd_forward,
    "solve": cmd_solve,
    "rates": cmd_rates,
    "verify": cmd_verify,
    "probe": cmd_probe,
    "demo-nonunique": cmd_demo_nonunique,
}


def _flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--fast-cycle", dest="fast_cycle", action="store_const", const=True, default=None)


def _family_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--family", choices=("constant", "sinusoid", "fourier-decay", "kink"))
    parser.add_argument("--offset", type=float)
    parser.add_argument("--amplitude", type=float)
    parser.add_argument("--frequency", type=int)
    parser.add_argument("--beta", type=float)
    parser.add_argument("--modes", type=int)
    parser.add_argument("--margin", type=float)
    parser.add_argument("--family-seed", dest="family_seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="flat key = value file (a manifest works)")
    shared.add_argument("--out")
    shared.add_argument("--seed", type=int)
    shared.add_argument("--grid-nt", dest="grid_nt", type=int)
    shared.add_argument("--grid-nx", dest="grid_nx", type=int)
    shared.add_argument("--xmax", type=float)
    shared.add_argument("--workers", type=int)
    shared.add_argument("--log-level", dest="log_level", choices=("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"))
    shared.add_argument("--svg", action=argparse.BooleanOptionalAction, default=None)

    parser = argparse.ArgumentParser(prog="hyporeg", description="Tikhonov regularization of the hypograph operator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    forward = sub.add_parser("forward", parents=[shared], help="rasterize a curve's hypograph")
    forward.add_argument("--curve", help="curve CSV with header t,value")
    forward.add_argument("--sampling", choices=("node", "interpolant"))
    _family_flags(forward)

    solve_p = sub.add_parser("solve", parents=[shared], help="globally minimise the Tikhonov functional")
    solve_p.add_argument("--data", help="field CSV")
    solve_p.add_argument("--alpha", type=float)
    solve_p.add_argument("--refine-sweeps", dest="refine_sweeps", type=int)
    solve_p.add_argument("--levels", type=int)
    _flag(solve_p)

    rates = sub.add_parser("rates", parents=[shared], help="error versus noise level experiment")
    _family_flags(rates)
    rates.add_argument("--s", type=float)
    rates.add_argument("--q", type=parse_float)
    rates.add_argument("--deltas", help="comma-separated, strictly descending")
    rates.add_argument("--rule", choices=("power", "constant"))
    rates.add_argument("--alpha0", type=float)
    rates.add_argument("--exponent", type=float)
    rates.add_argument("--reps", type=int)
    rates.add_argument("--noise", choices=("gaussian", "shift", "wave"))
    rates.add_argument("--resolve-cells", dest="resolve_cells", type=float)
    rates.add_argument("--refine-sweeps", dest="refine_sweeps", type=int)
    rates.add_argument("--levels", type=int)
    _flag(rates)

    verify = sub.add_parser("verify", parents=[shared], help="sample the variational inequality")
    _family_flags(verify)
    verify.add_argument("--s", type=float)
    verify.add_argument("--q", type=parse_float)
    verify.add_argument("--c1", type=float)
    verify.add_argument("--c2", type=float)
    verify.add_argument("--c3", type=float)
    verify.add_argument("--fit-constants", dest="fit_constants", action="store_const", const=True, default=None)
    verify.add_argument("--trials", type=int)
    verify.add_argument("--min-magnitude", dest="min_magnitude", type=float)
    verify.add_argument("--max-magnitude", dest="max_magnitude", type=float)

    probe = sub.add_parser("probe", parents=[shared], help="difference quotients of the forward map")
    _family_flags(probe)
    probe.add_argument("--svalues", help="comma-separated, strictly descending")
    probe.add_argument("--sigma", type=float, help="constant direction value")

    demo = sub.add_parser("demo-nonunique", parents=[shared], help="half-band data with many minimisers")
    demo.add_argument("--delta", type=float)
    demo.add_argument("--alphas", help="comma-separated")
    demo.add_argument("--band-rtol", dest="band_rtol", type=float)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = get_settings()
    logging.basicConfig(
        level=getattr(logging, args.log_level or settings.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    overrides = {k: v for k, v in vars(args).items() if k not in {"command", "config"}}
    try:
        cfg = resolve_config(args.command, overrides, settings, args.config)
        logging.getLogger().setLevel(getattr(logging, cfg.log_level))
        write_manifest(cfg.out, cfg.model_dump())
        return COMMANDS[args.command](cfg)
    except (ConfigError, InvariantError, OSError) as exc:
        logger.debug("configuration failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        logger.debug("numerical failure", exc_info=True)
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
