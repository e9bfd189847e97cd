"""CSV artifacts, manifests and atomic file writes."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from pathlib import Path
import tempfile
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from hyporeg.core.errors import CsvFormatError, InvariantError
from hyporeg.core.geometry import Curve, CylinderField, PeriodicGrid
from hyporeg.shared.text import format_cell, format_float


logger = logging.getLogger(__name__)

FIELD_CORNER = "t\\x"
# corner cell "t\x;x_max=<repr>" keeps the radial extent exact
XMAX_TAG = ";x_max="


def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.info("wrote %s", path)
    return path


def render_csv(header: Sequence[str] | None, rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    if header is not None:
        writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(value) for value in row])
    return buffer.getvalue()


def write_csv(path: str | Path, header: Sequence[str] | None, rows: Iterable[Sequence[Any]]) -> Path:
    return atomic_write_text(path, render_csv(header, rows))


def write_curve_csv(path: str | Path, curve: Curve) -> Path:
    return write_csv(path, ("t", "value"), zip(curve.grid.angles, curve.values))


def write_field_csv(path: str | Path, field: CylinderField) -> Path:
    grid = field.grid
    header = [f"{FIELD_CORNER}{XMAX_TAG}{float(grid.x_max)!r}", *(format_float(float(c)) for c in grid.centers)]
    rows = ([t, *row] for t, row in zip(grid.angles, field.cells))
    return write_csv(path, header, rows)


def _read_rows(path: str | Path) -> list[list[str]]:
    try:
        with open(path, encoding="utf-8", newline="") as handle:
            return [row for row in csv.reader(handle)]
    except OSError as exc:
        raise CsvFormatError(str(path), 0, f"cannot read file: {exc}") from exc


def _parse_number(path: str | Path, line: int, text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise CsvFormatError(str(path), line, f"not a number: {text!r}") from exc
    if not math.isfinite(value):
        raise CsvFormatError(str(path), line, f"non-finite value: {text!r}")
    return value


def read_curve_values(path: str | Path) -> np.ndarray:
    """Samples of a ``t,value`` curve file; t must run over the uniform angles."""
    rows = _read_rows(path)
    if not rows or [cell.strip() for cell in rows[0]] != ["t", "value"]:
        raise CsvFormatError(str(path), 1, "expected header 't,value'")
    body = [(number, row) for number, row in enumerate(rows[1:], start=2) if any(cell.strip() for cell in row)]
    if len(body) < 3:
        raise CsvFormatError(str(path), len(rows), "a curve needs at least 3 nodes")
    step = 2.0 * math.pi / len(body)
    values = []
    for index, (number, row) in enumerate(body):
        if len(row) != 2:
            raise CsvFormatError(str(path), number, f"expected 2 columns, got {len(row)}")
        t = _parse_number(path, number, row[0])
        if abs(t - index * step) > 1e-9 * max(1.0, abs(t)):
            raise CsvFormatError(str(path), number, f"angle {t!r} is not node {index} of a uniform grid")
        values.append(_parse_number(path, number, row[1]))
    return np.array(values)


def read_curve_csv(path: str | Path, n_x: int, x_max: float) -> Curve:
    values = read_curve_values(path)
    grid = PeriodicGrid(n_t=values.size, n_x=n_x, x_max=x_max)
    try:
        return Curve(values, grid)
    except InvariantError as exc:
        raise CsvFormatError(str(path), 0, str(exc)) from exc


def read_field_csv(path: str | Path) -> CylinderField:
    """CylinderField from its CSV.

    x_max comes from the corner cell; files without it fall back to twice the
    first cell centre times n_x, which is only good to 12 digits.
    """
    rows = _read_rows(path)
    corner = rows[0][0].strip() if rows and rows[0] else ""
    if not corner.startswith(FIELD_CORNER):
        raise CsvFormatError(str(path), 1, f"expected header starting with {FIELD_CORNER!r}")
    tag = corner[len(FIELD_CORNER) :]
    if tag and not tag.startswith(XMAX_TAG):
        raise CsvFormatError(str(path), 1, f"unexpected corner cell {corner!r}")
    centers = np.array([_parse_number(path, 1, cell) for cell in rows[0][1:]])
    n_x = centers.size
    if n_x < 2:
        raise CsvFormatError(str(path), 1, "a field needs at least 2 radial cells")
    if tag:
        x_max = _parse_number(path, 1, tag[len(XMAX_TAG) :])
    else:
        x_max = float(format_float(2.0 * float(centers[0]) * n_x))
    expected = (np.arange(n_x) + 0.5) * (x_max / n_x)
    if not np.allclose(centers, expected, rtol=1e-9, atol=1e-12):
        raise CsvFormatError(str(path), 1, "radial cell centres are not uniform from 0")
    body = [(number, row) for number, row in enumerate(rows[1:], start=2) if any(cell.strip() for cell in row)]
    if len(body) < 3:
        raise CsvFormatError(str(path), len(rows), "a field needs at least 3 angle rows")
    cells = np.empty((len(body), n_x))
    step = 2.0 * math.pi / len(body)
    for index, (number, row) in enumerate(body):
        if len(row) != n_x + 1:
            raise CsvFormatError(str(path), number, f"expected {n_x + 1} columns, got {len(row)}")
        t = _parse_number(path, number, row[0])
        if abs(t - index * step) > 1e-9 * max(1.0, abs(t)):
            raise CsvFormatError(str(path), number, f"angle {t!r} is not node {index} of a uniform grid")
        cells[index] = [_parse_number(path, number, cell) for cell in row[1:]]
    try:
        grid = PeriodicGrid(n_t=len(body), n_x=n_x, x_max=x_max)
    except InvariantError as exc:
        raise CsvFormatError(str(path), 1, str(exc)) from exc
    return CylinderField(cells, grid)


def _manifest_value(value: Any) -> str | None:
    if value is None:
        return None
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "inf" if math.isinf(value) and value > 0 else repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(_manifest_value(item) or "" for item in value)
    return str(value)


def write_manifest(out_dir: str | Path, resolved: Mapping[str, Any]) -> Path:
    """Flat ``key = value`` record of a resolved run; feeds back into ``--config``."""
    lines = ["# hyporeg run manifest"]
    for key in sorted(resolved):
        text = _manifest_value(resolved[key])
        if text is not None:
            lines.append(f"{key} = {text}")
    return atomic_write_text(Path(out_dir) / "manifest.txt", "\n".join(lines) + "\n")
