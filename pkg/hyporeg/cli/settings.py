from __future__ import annotations

from dataclasses import dataclass
import math
import os


@dataclass(frozen=True)
class Settings:
    grid_nt: int
    grid_nx: int
    xmax: float
    reps: int
    seed: int
    out_dir: str
    workers: int
    log_level: str
    refine_sweeps: int
    svg: bool


def _int_env(name: str, default: int, min_value: int = 1) -> int:
    raw = os.getenv(name)
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError:
        return default
    if value < min_value:
        return default
    return value


def _float_env(name: str, default: float, min_value: float = 0.0) -> float:
    raw = os.getenv(name)
    if raw is None:
        return default
    try:
        value = float(raw)
    except ValueError:
        return default
    if not math.isfinite(value) or value <= min_value:
        return default
    return value


def _bool_env(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None:
        return default
    return raw.strip().lower() in {"1", "true", "yes", "on"}


def _level_env(name: str, default: str) -> str:
    raw = (os.getenv(name) or "").strip().upper()
    if raw in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
        return raw
    return default


def get_settings() -> Settings:
    return Settings(
        grid_nt=_int_env("HYPOREG_GRID_NT", 256, min_value=3),
        grid_nx=_int_env("HYPOREG_GRID_NX", 256, min_value=2),
        xmax=_float_env("HYPOREG_XMAX", 3.0),
        reps=_int_env("HYPOREG_REPS", 5),
        seed=_int_env("HYPOREG_SEED", 0, min_value=0),
        out_dir=os.getenv("HYPOREG_OUT_DIR", "./hyporeg-out"),
        workers=_int_env("HYPOREG_WORKERS", 1),
        log_level=_level_env("HYPOREG_LOG_LEVEL", "INFO"),
        refine_sweeps=_int_env("HYPOREG_REFINE_SWEEPS", 50, min_value=0),
        svg=_bool_env("HYPOREG_SVG", True),
    )
