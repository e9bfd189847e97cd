from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from hyporeg.shared.text import parse_float, parse_float_list


Command = Literal["forward", "solve", "rates", "verify", "probe", "demo-nonunique"]
FamilyName = Literal["constant", "sinusoid", "fourier-decay", "kink"]


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: Command
    out: str = Field(..., min_length=1)
    seed: int = Field(0, ge=0)
    grid_nt: int = Field(256, ge=3)
    grid_nx: int = Field(256, ge=2)
    xmax: float = Field(3.0, gt=0, allow_inf_nan=False)
    workers: int = Field(1, ge=1)
    svg: bool = True
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = "INFO"


class FamilyFields(BaseModel):
    family: FamilyName = "sinusoid"
    offset: float = Field(1.0, ge=0, allow_inf_nan=False)
    amplitude: float = Field(0.5, ge=0, allow_inf_nan=False)
    frequency: int = Field(1, ge=1)
    beta: float = Field(3.0, gt=0.5, allow_inf_nan=False)
    modes: int = Field(64, ge=1)
    margin: float = Field(0.1, gt=0, allow_inf_nan=False)
    family_seed: int = Field(0, ge=0)


def _float_list(value: object) -> object:
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, str):
        return parse_float_list(value)
    return value


class ForwardConfig(RunConfig, FamilyFields):
    command: Literal["forward"] = "forward"
    curve: str | None = None
    sampling: Literal["node", "interpolant"] = "node"


class SolveConfig(RunConfig):
    command: Literal["solve"] = "solve"
    data: str = Field(..., min_length=1)
    alpha: float = Field(..., gt=0, allow_inf_nan=False)
    refine_sweeps: int = Field(50, ge=0)
    levels: int | None = Field(None, ge=2)
    fast_cycle: bool = False


class RatesConfig(RunConfig, FamilyFields):
    command: Literal["rates"] = "rates"
    s: float | None = Field(None, gt=1, le=2)
    q: float | None = None
    deltas: list[float] = Field(default_factory=lambda: [2.0**-k for k in range(2, 8)], min_length=1)
    rule: Literal["power", "constant"] = "constant"
    alpha0: float = Field(0.05, gt=0, allow_inf_nan=False)
    exponent: float | None = None
    reps: int = Field(5, ge=1)
    noise: Literal["gaussian", "shift", "wave"] = "gaussian"
    resolve_cells: float = Field(0.0, ge=0, allow_inf_nan=False)
    refine_sweeps: int = Field(50, ge=0)
    levels: int | None = Field(None, ge=2)
    fast_cycle: bool = False

    @field_validator("deltas", mode="before")
    @classmethod
    def _split_deltas(cls, value: object) -> object:
        return _float_list(value)

    @field_validator("q", mode="before")
    @classmethod
    def _parse_q(cls, value: object) -> object:
        return parse_float(value) if isinstance(value, str) else value

    @field_validator("q")
    @classmethod
    def _check_q(cls, value: float | None) -> float | None:
        if value is not None and not value > 1:
            raise ValueError("q must be > 1 (use inf for the bounded case)")
        return value

    @field_validator("deltas")
    @classmethod
    def _check_deltas(cls, value: list[float]) -> list[float]:
        if any(not math.isfinite(d) or d <= 0 for d in value):
            raise ValueError("deltas must be finite and > 0")
        if any(b >= a for a, b in zip(value, value[1:])):
            raise ValueError("deltas must be strictly descending")
        return value

    @model_validator(mode="after")
    def _check_tag(self) -> RatesConfig:
        if (self.s is None) != (self.q is None):
            raise ValueError("give both s and q, or neither to use the family's nominal tag")
        return self


class VerifyConfig(RunConfig, FamilyFields):
    command: Literal["verify"] = "verify"
    s: float = Field(2.0, gt=1, le=2)
    q: float = math.inf
    c1: float | None = Field(None, gt=0, allow_inf_nan=False)
    c2: float | None = Field(None, ge=0, allow_inf_nan=False)
    c3: float | None = Field(None, ge=0, allow_inf_nan=False)
    fit_constants: bool = False
    trials: int = Field(2000, ge=1)
    min_magnitude: float = Field(1e-3, gt=0)
    max_magnitude: float = Field(1.0, gt=0)

    @field_validator("q", mode="before")
    @classmethod
    def _parse_q(cls, value: object) -> object:
        return parse_float(value) if isinstance(value, str) else value

    @model_validator(mode="after")
    def _check_constants(self) -> VerifyConfig:
        if self.q < 2:
            raise ValueError("q must satisfy 2 <= q <= inf")
        if (self.c1 is None) != (self.c2 is None):
            raise ValueError("--c1 and --c2 go together")
        if self.c3 is not None and self.c1 is None:
            raise ValueError("--c3 needs --c1 and --c2")
        if self.fit_constants and self.c1 is not None:
            raise ValueError("--fit-constants excludes explicit constants")
        if self.min_magnitude > self.max_magnitude:
            raise ValueError("min_magnitude must not exceed max_magnitude")
        return self


class ProbeConfig(RunConfig, FamilyFields):
    command: Literal["probe"] = "probe"
    svalues: list[float] = Field(default_factory=lambda: [0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001], min_length=2)
    sigma: float = Field(1.0, allow_inf_nan=False)

    @field_validator("svalues", mode="before")
    @classmethod
    def _split_svalues(cls, value: object) -> object:
        return _float_list(value)

    @field_validator("sigma")
    @classmethod
    def _nonzero(cls, value: float) -> float:
        if value == 0:
            raise ValueError("sigma must not be zero")
        return value


class DemoConfig(RunConfig):
    command: Literal["demo-nonunique"] = "demo-nonunique"
    grid_nt: int = Field(512, ge=3)
    grid_nx: int = Field(512, ge=2)
    xmax: float | None = Field(None, gt=0, allow_inf_nan=False)
    delta: float = Field(0.5, gt=0, allow_inf_nan=False)
    alphas: list[float] = Field(default_factory=lambda: [1e-3, 1e-1, 10.0], min_length=1)
    band_rtol: float = Field(1e-3, gt=0)

    @field_validator("alphas", mode="before")
    @classmethod
    def _split_alphas(cls, value: object) -> object:
        return _float_list(value)

    @field_validator("alphas")
    @classmethod
    def _positive(cls, value: list[float]) -> list[float]:
        if any(not math.isfinite(a) or a <= 0 for a in value):
            raise ValueError("alphas must be finite and > 0")
        return value

    @field_validator("delta")
    @classmethod
    def _band_fits(cls, value: float) -> float:
        if value * value >= math.pi:
            raise ValueError("delta^2 must be < pi")
        return value


CONFIG_MODELS: dict[str, type[RunConfig]] = {
    "forward": ForwardConfig,
    "solve": SolveConfig,
    "rates": RatesConfig,
    "verify": VerifyConfig,
    "probe": ProbeConfig,
    "demo-nonunique": DemoConfig,
}
