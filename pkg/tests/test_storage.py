"""Unit tests for `hyporeg.cli.storage`, the CSV and manifest layer every
command writes through.

Covered behaviours:

* ``write_field_csv`` / ``read_field_csv``: the grid is recovered from the
  header, so a field written by ``forward`` feeds ``solve`` unchanged.
* Malformed input is reported as ``CsvFormatError`` with the offending line.
* ``write_manifest``: sorted ``key = value`` lines, ``inf`` spelled out,
  ``None`` omitted, so a manifest can be passed back through ``--config``.
* Writes are atomic: no temporary files are left behind.
"""

import math

import numpy as np
import pytest

from hyporeg.cli.storage import (
    read_curve_csv,
    read_field_csv,
    write_csv,
    write_curve_csv,
    write_field_csv,
    write_manifest,
)
from hyporeg.core.errors import CsvFormatError
from hyporeg.core.forward import apply_forward
from hyporeg.core.geometry import Curve, PeriodicGrid


@pytest.mark.p0
@pytest.mark.bvt
def test_field_csv_round_trip(tmp_path, sinusoid):
    """The written field reads back on the same grid with 12-digit values."""
    field = apply_forward(sinusoid)
    path = write_field_csv(tmp_path / "field.csv", field)

    loaded = read_field_csv(path)

    assert loaded.grid == field.grid
    np.testing.assert_allclose(loaded.cells, field.cells, atol=1e-11)
    assert path.read_text().startswith("t\\x;x_max=2.0,0.03125,")


@pytest.mark.p0
def test_field_csv_keeps_x_max_exact(tmp_path):
    """x_max = 512/415 survives the round trip bit for bit.

    Why: the reader used to rebuild x_max from 12-digit cell centres, so the
    loaded grid compared unequal to the written one.
    """
    grid = PeriodicGrid(8, 16, 512.0 / 415.0)
    field = apply_forward(Curve.constant(grid, 0.5))

    loaded = read_field_csv(write_field_csv(tmp_path / "field.csv", field))

    assert loaded.grid.x_max == 512.0 / 415.0
    assert loaded.grid == grid


@pytest.mark.p0
def test_field_csv_without_x_max_falls_back_to_centres(tmp_path, sinusoid):
    """Files whose corner is a bare t\\x still load from the cell centres."""
    path = write_field_csv(tmp_path / "field.csv", apply_forward(sinusoid))
    lines = path.read_text().splitlines()
    lines[0] = "t\\x" + lines[0][lines[0].index(",") :]
    path.write_text("\n".join(lines) + "\n")

    loaded = read_field_csv(path)

    assert loaded.grid == sinusoid.grid

    lines[0] = "t\\x;n_x=32" + lines[0][lines[0].index(",") :]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(CsvFormatError) as excinfo:
        read_field_csv(path)
    assert excinfo.value.line == 1


@pytest.mark.p0
def test_curve_csv_round_trip(tmp_path, sinusoid):
    path = write_curve_csv(tmp_path / "curve.csv", sinusoid)

    loaded = read_curve_csv(path, sinusoid.grid.n_x, sinusoid.grid.x_max)

    assert loaded.grid == sinusoid.grid
    np.testing.assert_allclose(loaded.values, sinusoid.values, rtol=1e-11)


@pytest.mark.p0
def test_field_csv_errors_carry_line_numbers(tmp_path, sinusoid):
    """A bad header is line 1; a bad cell reports the row it sits on."""
    bad_header = tmp_path / "bad_header.csv"
    bad_header.write_text("angle,0.5\n0,1\n")
    with pytest.raises(CsvFormatError) as excinfo:
        read_field_csv(bad_header)
    assert excinfo.value.line == 1

    path = write_field_csv(tmp_path / "field.csv", apply_forward(sinusoid))
    lines = path.read_text().splitlines()
    cells = lines[2].split(",")
    cells[3] = "oops"
    lines[2] = ",".join(cells)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(CsvFormatError) as excinfo:
        read_field_csv(path)
    assert excinfo.value.line == 3
    assert "oops" in str(excinfo.value)


@pytest.mark.p0
def test_curve_csv_rejects_irregular_angles_and_ranges(tmp_path):
    irregular = tmp_path / "irregular.csv"
    irregular.write_text("t,value\n0,1\n1,1\n2,1\n")
    with pytest.raises(CsvFormatError) as excinfo:
        read_curve_csv(irregular, 8, 3.0)
    assert excinfo.value.line == 3

    step = 2.0 * math.pi / 3
    too_high = tmp_path / "too_high.csv"
    too_high.write_text(f"t,value\n0,1\n{step!r},5\n{2 * step!r},1\n")
    with pytest.raises(CsvFormatError):
        read_curve_csv(too_high, 8, 3.0)


@pytest.mark.p0
def test_missing_file_is_a_format_error(tmp_path):
    with pytest.raises(CsvFormatError):
        read_field_csv(tmp_path / "absent.csv")


@pytest.mark.p0
@pytest.mark.bvt
def test_manifest_format(tmp_path):
    """Keys sorted, floats via repr, ``inf`` spelled out, ``None`` dropped."""
    path = write_manifest(
        tmp_path,
        {"b": 0.1, "a": math.inf, "c": None, "d": [1.0, 0.5], "e": True, "f": 3},
    )

    lines = path.read_text().splitlines()
    assert lines[0].startswith("#")
    assert lines[1:] == ["a = inf", "b = 0.1", "d = 1.0,0.5", "e = true", "f = 3"]


@pytest.mark.p0
def test_writes_leave_no_temporary_files(tmp_path):
    write_csv(tmp_path / "out" / "table.csv", ("x", "ok"), [(0.5, True), (math.nan, False)])

    assert sorted(p.name for p in (tmp_path / "out").iterdir()) == ["table.csv"]
    assert (tmp_path / "out" / "table.csv").read_text() == "x,ok\n0.5,true\nnan,false\n"
