"""Sampled checks of the variational inequality

    c₁‖γ - γ†‖² ≤ ‖γ‖² - ‖γ†‖² + c₂ ‖F(γ) - F(γ†)‖^{4-4/s} + c₃ ‖F(γ) - F(γ†)‖^{2-2q/(qs-s+1)}

with all seminorms in H¹₀. The c₃ term is absent for q = ∞.
"""

from __future__ import annotations

from dataclasses import dataclass
import logging
import math
from typing import Literal

import numpy as np
from scipy.optimize import brentq

from hyporeg.core.errors import InvariantError, NumericalError
from hyporeg.core.forward import fidelity_exact
from hyporeg.core.geometry import Curve, discrete_curvature_bound, seminorm_h1, seminorm_values


logger = logging.getLogger(__name__)

PerturbationKind = Literal["smooth", "rough", "bump"]
PERTURBATION_KINDS: tuple[PerturbationKind, ...] = ("smooth", "rough", "bump")
VerificationMode = Literal["explicit", "supplied", "empirical"]


@dataclass(frozen=True)
class InequalityTerms:
    lhs_seminorm: float
    gap: float
    fidelity: float
    power_term: float
    tail_term: float

    def rhs(self, c2: float, c3: float) -> float:
        return self.gap + c2 * self.power_term + c3 * self.tail_term

    def margin(self, c1: float, c2: float, c3: float) -> float:
        return self.rhs(c2, c3) - c1 * self.lhs_seminorm


@dataclass(frozen=True)
class VerificationTrial:
    index: int
    kind: str
    magnitude: float
    lhs: float
    rhs: float
    margin: float
    fidelity: float


@dataclass(frozen=True)
class VerificationReport:
    mode: VerificationMode
    constants: tuple[float, float, float]
    smoothness: tuple[float, float]
    trials: tuple[VerificationTrial, ...]
    worst_margin: float
    violations: int
    max_feasible_c1: float
    tolerance: float


def _check_exponents(s: float, q: float) -> None:
    if not 1.0 < s <= 2.0:
        raise InvariantError(f"variational inequality needs 1 < s <= 2, got s={s}")
    if not q >= 2.0:
        raise InvariantError(f"variational inequality needs 2 <= q <= inf, got q={q}")


def inequality_terms(gamma: Curve, truth: Curve, s: float, q: float) -> InequalityTerms:
    """Both sides' building blocks; ‖F(γ)-F(γ†)‖² is the exact L¹ distance."""
    _check_exponents(s, q)
    gamma.grid.require_same(truth.grid)
    fidelity = fidelity_exact(gamma, truth)
    power_term = fidelity ** (2.0 - 2.0 / s)
    if math.isinf(q):
        tail_term = 0.0
    else:
        tail_term = fidelity ** (1.0 - q / (q * s - s + 1.0))
    return InequalityTerms(
        lhs_seminorm=float(seminorm_values(gamma.values - truth.values, truth.grid.h_t)),
        gap=seminorm_h1(gamma) - seminorm_h1(truth),
        fidelity=fidelity,
        power_term=power_term,
        tail_term=tail_term,
    )


def _shape(kind: PerturbationKind, n_t: int, rng: np.random.Generator) -> np.ndarray:
    t = np.arange(n_t) * (2.0 * math.pi / n_t)
    if kind == "smooth":
        k = np.arange(1, 5)
        a = rng.standard_normal(4)
        b = rng.standard_normal(4)
        shape = np.cos(np.outer(t, k)) @ a + np.sin(np.outer(t, k)) @ b
    elif kind == "rough":
        shape = rng.standard_normal(n_t)
    else:
        width = int(rng.integers(1, max(2, n_t // 8) + 1))
        centre = int(rng.integers(0, n_t))
        distance = np.abs((np.arange(n_t) - centre + n_t // 2) % n_t - n_t // 2)
        shape = np.clip(1.0 - distance / width, 0.0, None) * rng.choice([-1.0, 1.0])
    peak = float(np.max(np.abs(shape)))
    return shape / peak if peak > 0 else shape


def sample_perturbations(
    truth: Curve,
    trials: int,
    seed: int,
    magnitudes: tuple[float, float] = (1e-3, 1.0),
) -> list[tuple[str, float, Curve]]:
    """Perturbed curves γ = clip(γ† + σ); kinds cycle smooth, rough, bump."""
    low, high = magnitudes
    if not 0 < low <= high:
        raise InvariantError(f"magnitude range must satisfy 0 < low <= high, got {magnitudes}")
    rng = np.random.default_rng(seed)
    grid = truth.grid
    out = []
    for index in range(trials):
        kind = PERTURBATION_KINDS[index % len(PERTURBATION_KINDS)]
        magnitude = float(10.0 ** rng.uniform(math.log10(low), math.log10(high)))
        values = np.clip(truth.values + magnitude * _shape(kind, grid.n_t, rng), 0.0, grid.x_max)
        out.append((kind, magnitude, Curve(values, grid)))
    return out


def empirical_c1(s: float, q: float) -> float:
    """c₁ of the interpolation argument: (2q-1)(s-1)/(2q), or s-1 for q = ∞."""
    if math.isinf(q):
        return s - 1.0
    return (2.0 * q - 1.0) * (s - 1.0) / (2.0 * q)


def constants_from_scale(scale: float, s: float, q: float) -> tuple[float, float]:
    """(c₂, c₃) generated by one interpolation constant C."""
    c2 = 0.5 * s * scale ** (2.0 / s)
    if math.isinf(q):
        return c2, 0.0
    e = q * s - s + 1.0
    return c2, e / (2.0 * q) * scale ** (2.0 * q / e)


def _fit_scale(terms: list[InequalityTerms], c1: float, s: float, q: float) -> float:
    def worst(scale: float) -> float:
        c2, c3 = constants_from_scale(scale, s, q)
        return min(term.margin(c1, c2, c3) for term in terms)

    if worst(0.0) >= 0:
        return 0.0
    upper = 1.0
    for _ in range(200):
        if worst(upper) >= 0:
            break
        upper *= 4.0
    else:
        raise NumericalError("could not bracket an interpolation constant for the inequality")
    scale = brentq(worst, 0.0, upper, xtol=1e-14, rtol=1e-12)
    while worst(scale) < 0:
        scale = scale * (1.0 + 1e-9) + 1e-15
    return scale


def verify_variational_inequality(
    truth: Curve,
    exponents: tuple[float, float] = (2.0, math.inf),
    constants: tuple[float, float, float] | None = None,
    trials: int = 200,
    seed: int = 0,
    *,
    mode: VerificationMode | None = None,
    curvature: float | None = None,
    magnitudes: tuple[float, float] = (1e-3, 1.0),
    tolerance: float = 1e-8,
) -> VerificationReport:
    """Evaluate both sides on random perturbations of ``truth``.

    Constants come from ``constants`` when given; the explicit smooth case
    (s = 2, q = ∞) uses c₁ = 1 and c₂ = 2·curvature (closed-form curvature if
    passed, discrete bound otherwise); otherwise c₂ and c₃ are fitted so that
    every sampled margin is nonnegative.
    """
    s, q = exponents
    _check_exponents(s, q)
    if trials < 1:
        raise InvariantError("trials must be >= 1")
    samples = sample_perturbations(truth, trials, seed, magnitudes)
    terms = [inequality_terms(gamma, truth, s, q) for _, _, gamma in samples]

    if constants is not None:
        resolved: VerificationMode = "supplied"
        c1, c2, c3 = (float(c) for c in constants)
    elif mode != "empirical" and s == 2.0 and math.isinf(q):
        resolved = "explicit"
        kappa = curvature if curvature is not None else discrete_curvature_bound(truth)
        c1, c2, c3 = 1.0, 2.0 * kappa, 0.0
    else:
        if mode == "explicit":
            raise InvariantError("explicit constants exist only for s = 2, q = inf")
        resolved = "empirical"
        c1 = empirical_c1(s, q)
        c2, c3 = constants_from_scale(_fit_scale(terms, c1, s, q), s, q)

    rows = []
    for index, ((kind, magnitude, _), term) in enumerate(zip(samples, terms)):
        rows.append(
            VerificationTrial(
                index=index,
                kind=kind,
                magnitude=magnitude,
                lhs=c1 * term.lhs_seminorm,
                rhs=term.rhs(c2, c3),
                margin=term.margin(c1, c2, c3),
                fidelity=term.fidelity,
            )
        )
    ratios = [term.rhs(c2, c3) / term.lhs_seminorm for term in terms if term.lhs_seminorm > 0]
    worst = min(row.margin for row in rows)
    violations = sum(1 for row in rows if row.margin < -tolerance)
    logger.info("inequality check mode=%s trials=%d worst margin=%.6g violations=%d", resolved, trials, worst, violations)
    return VerificationReport(
        mode=resolved,
        constants=(c1, c2, c3),
        smoothness=(s, q),
        trials=tuple(rows),
        worst_margin=worst,
        violations=violations,
        max_feasible_c1=min(ratios) if ratios else math.inf,
        tolerance=tolerance,
    )
