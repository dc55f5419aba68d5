"""
Tests for the command-line interface.
"""

import pytest
from click.testing import CliRunner

from periodic_fde.cli import cli
from periodic_fde.core.storage import read_matrix, read_solution

SMALL_RUN = ["--L-list", "10", "--m-list", "5", "--grid-points", "2001"]


@pytest.fixture
def runner(monkeypatch):
    for name in ("PFDE_CONFIG", "PFDE_OUTPUT_DIR", "PFDE_GRID_POINTS", "LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    return CliRunner()


def test_problems_lists_builtins(runner):
    result = runner.invoke(cli, ["problems"])
    assert result.exit_code == 0
    assert "sd_proto:" in result.output
    assert "cd_proto:" in result.output


def test_solve_writes_solution_and_plot_script(runner, tmp_path):
    output_dir = tmp_path / "results"
    dump_dir = tmp_path / "dump"
    result = runner.invoke(
        cli, ["solve", "--L", "10", "--m", "5", *SMALL_RUN, "--output-dir", str(output_dir), "--dump-dir", str(dump_dir)]
    )
    assert result.exit_code == 0, result.output
    assert "converged: True" in result.output

    solution = read_solution(output_dir / "solution_sd_proto_L10_m5.txt")
    assert 6.9 <= solution.period <= 7.1
    assert (output_dir / "plot_solution_sd_proto_L10_m5.py").exists()
    assert read_matrix(dump_dir / "jacobian.txt").shape == (52, 52)


def test_solve_shows_iterations(runner, tmp_path):
    save = tmp_path / "hopf.txt"
    config = tmp_path / "run.yaml"
    config.write_text("y0: 0.1\nseed:\n  strategy: hopf\n", encoding="utf-8")
    result = runner.invoke(
        cli, ["--config", str(config), "solve", *SMALL_RUN, "--save", str(save), "--show-iterations", "--output-dir", str(tmp_path)]
    )
    assert result.exit_code == 0, result.output
    assert "  iter 1 residual" in result.output
    assert save.exists()


def test_bad_option_value_reports_error(runner, tmp_path):
    result = runner.invoke(cli, ["solve", "--L-list", "abc", "--output-dir", str(tmp_path)])
    assert result.exit_code == 1
    assert "Error solving" in result.output


def test_missing_config_file(runner, tmp_path):
    result = runner.invoke(cli, ["--config", str(tmp_path / "absent.yaml"), "problems"])
    assert result.exit_code == 2


def test_sweep_fails_when_cells_fail(runner, tmp_path):
    config = tmp_path / "run.yaml"
    config.write_text("seed:\n  strategy: hopf\nnewton:\n  max_iters: 1\n", encoding="utf-8")
    result = runner.invoke(cli, ["--config", str(config), "sweep", *SMALL_RUN, "--output-dir", str(tmp_path)])
    assert result.exit_code == 1
    assert "1 of 1 cells failed" in result.output
    assert (tmp_path / "convergence.csv").exists()


@pytest.mark.slow
def test_verify_fixedpoint(runner, tmp_path):
    result = runner.invoke(cli, ["verify-fixedpoint", "--L-list", "10,20", "--m-list", "3", "--output-dir", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert "All cells are fixed points" in result.output
    assert (tmp_path / "fixed_point.csv").exists()
