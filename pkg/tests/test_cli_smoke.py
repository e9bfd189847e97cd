"""Smoke tests for the ``hyporeg`` command line.

Each subcommand runs once on a grid small enough for the unit suite and is
checked for its exit code and the artifacts it promises. The chain
``forward`` → ``solve`` → ``solve --config manifest.txt`` doubles as the
round-trip check of the manifest format.
"""

import pytest

from hyporeg.cli.main import EXIT_CONFIG, EXIT_OK, main


SMALL = ["--grid-nt", "16", "--grid-nx", "32", "--no-svg"]


@pytest.fixture(autouse=True)
def _isolated_env(clean_env):
    return clean_env


@pytest.mark.p0
@pytest.mark.bvt
def test_forward_then_solve_then_replay(tmp_path, capsys):
    """forward writes a field, solve reads it, the solve manifest replays.

    Expected: exit 0 three times; ``solve_report.csv`` from the replay is
    byte-identical to the first solve's.
    """
    forward_dir = tmp_path / "forward"
    assert main(["forward", "--out", str(forward_dir), *SMALL]) == EXIT_OK
    assert (forward_dir / "field.csv").exists()
    assert (forward_dir / "curve.csv").exists()
    assert "command = forward" in (forward_dir / "manifest.txt").read_text()

    solve_dir = tmp_path / "solve"
    argv = ["solve", "--data", str(forward_dir / "field.csv"), "--alpha", "0.1", "--refine-sweeps", "3"]
    assert main([*argv, "--out", str(solve_dir), "--no-svg"]) == EXIT_OK
    assert "objective=" in capsys.readouterr().out
    manifest = (solve_dir / "manifest.txt").read_text()
    assert "alpha = 0.1" in manifest
    assert "svg = false" in manifest

    assert main(["solve", "--config", str(solve_dir / "manifest.txt")]) == EXIT_OK
    assert (solve_dir / "minimizer.csv").exists()
    first = (solve_dir / "solve_report.csv").read_text()
    assert first.startswith("objective,misfit,regularizer,alpha")
    assert main(["solve", "--config", str(solve_dir / "manifest.txt")]) == EXIT_OK
    assert (solve_dir / "solve_report.csv").read_text() == first


@pytest.mark.p0
def test_forward_writes_svg(tmp_path):
    out = tmp_path / "svg"
    assert main(["forward", "--out", str(out), "--grid-nt", "16", "--grid-nx", "32"]) == EXIT_OK

    svg = (out / "forward.svg").read_text()
    assert "<svg" in svg
    assert sorted(p.name for p in out.iterdir()) == ["curve.csv", "field.csv", "forward.svg", "manifest.txt"]


@pytest.mark.p0
@pytest.mark.bvt
def test_configuration_errors_exit_with_2(tmp_path, capsys):
    assert main(["solve", "--out", str(tmp_path), "--alpha", "0.1"]) == EXIT_CONFIG
    assert "error:" in capsys.readouterr().err

    bad = tmp_path / "bad.csv"
    bad.write_text("nonsense\n")
    assert main(["solve", "--out", str(tmp_path), "--alpha", "0.1", "--data", str(bad)]) == EXIT_CONFIG
    assert "bad.csv:1" in capsys.readouterr().err


@pytest.mark.p0
def test_rates_command(tmp_path):
    out = tmp_path / "rates"
    argv = ["rates", "--out", str(out), *SMALL, "--deltas", "0.2,0.1", "--reps", "1", "--refine-sweeps", "0"]

    assert main(argv) == EXIT_OK
    summary = (out / "rates_summary.csv").read_text().splitlines()
    assert summary[0] == "delta,mean_h1,max_h1,mean_l2"
    assert summary[3] == "slope,intercept,residual,predicted_exponent"
    assert len((out / "rates.csv").read_text().splitlines()) == 3
    assert "predicted_exponent,1" in (out / "rates_fit.csv").read_text()


@pytest.mark.p0
def test_verify_command(tmp_path, capsys):
    out = tmp_path / "verify"

    assert main(["verify", "--out", str(out), *SMALL, "--trials", "12"]) == EXIT_OK
    assert "violations=" in capsys.readouterr().out
    summary = (out / "verify_summary.csv").read_text().splitlines()
    assert summary[1].startswith("explicit,1,")
    assert len((out / "verify.csv").read_text().splitlines()) == 13


@pytest.mark.p0
def test_probe_command(tmp_path, capsys):
    out = tmp_path / "probe"

    assert main(["probe", "--out", str(out), *SMALL, "--svalues", "0.1,0.01"]) == EXIT_OK
    assert "slope=" in capsys.readouterr().out
    assert (out / "probe.csv").read_text().splitlines()[0] == "s,ratio,predicted"


@pytest.mark.p0
def test_demo_command(tmp_path, capsys):
    out = tmp_path / "demo"
    argv = ["demo-nonunique", "--out", str(out), "--grid-nt", "16", "--grid-nx", "64", "--band-rtol", "0.05", "--no-svg"]

    assert main(argv) == EXIT_OK
    assert "passed=True" in capsys.readouterr().out
    rows = (out / "demo.csv").read_text().splitlines()
    assert len(rows) == 4
    assert all(row.endswith("true,true,true") for row in rows[1:])


@pytest.mark.p0
def test_demo_on_unresolvable_grid_is_a_config_error(tmp_path):
    argv = ["demo-nonunique", "--out", str(tmp_path), "--grid-nt", "16", "--grid-nx", "64", "--no-svg"]

    assert main(argv) == EXIT_CONFIG
