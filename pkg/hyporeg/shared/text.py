from __future__ import annotations

import math
from typing import Iterable


def format_float(value: float) -> str:
    """12 significant digits; ``inf``/``-inf``/``nan`` spelled out."""
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.12g}"


def format_cell(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    if hasattr(value, "item"):
        return format_cell(value.item())
    return str(value)


def parse_float(text: str) -> float:
    """Float parser that also accepts ``inf``/``infinity`` in any case."""
    cleaned = (text or "").strip().lower()
    if cleaned in {"inf", "+inf", "infinity", "∞"}:
        return math.inf
    return float(cleaned)


def parse_float_list(text: str | Iterable[float]) -> list[float]:
    """Comma-separated floats; blank entries are skipped."""
    if not isinstance(text, str):
        return [float(item) for item in text]
    return [parse_float(part) for part in text.split(",") if part.strip()]

