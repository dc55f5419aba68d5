"""Command-line interface for periodic FDE collocation runs.

This module provides commands for single solves, convergence sweeps and
the operator-form probes (fixed-point equivalence, consistency, stability).
"""

import logging
import math
import sys
from pathlib import Path
from typing import Any, Callable, Optional

import click
from dotenv import load_dotenv

from .config.settings import RunConfig
from .core.mesh import uniform_mesh
from .core.registry import available_problems, get_problem
from .core.storage import write_solution
from .harness.experiments import consistency_sweep, fixed_point_sweep, stability_sweep
from .harness.output import write_plot_script
from .harness.seeding import resample
from .harness.sweep import build_seed, convergence_sweep, solve_on_mesh
from .utils.helpers import format_float

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)


RUN_OPTIONS = (
    click.option("--problem", default=None, help="Problem name or 'module:factory' reference"),
    click.option("--y0", type=float, default=None, help="Amplitude parameter y0"),
    click.option("--L-list", "L_list", default=None, help="Comma separated interval counts, e.g. 10,20,40"),
    click.option("--m-list", "m_list", default=None, help="Comma separated degrees, e.g. 3,5"),
    click.option("--grid-points", type=int, default=None, help="Residual grid size (default 10001)"),
    click.option("--output-dir", default=None, type=click.Path(file_okay=False), help="Directory for results"),
)


def run_options(command: Callable) -> Callable:
    """Flags that override the configuration file."""
    for option in reversed(RUN_OPTIONS):
        command = option(command)
    return command


def _load_config(ctx: click.Context, **overrides: Any) -> RunConfig:
    config = RunConfig.load(ctx.obj.get("config_path"), **overrides)
    if ctx.obj.get("verbose"):
        config.log_level = "DEBUG"
    config.setup_logging()
    config.validate()
    return config


def _echo_line(line: str) -> None:
    click.echo(f"  {line}")


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Enable verbose logging")
@click.option("--config", "-c", "config_path", type=click.Path(exists=True, dir_okay=False), help="YAML configuration file")
@click.pass_context
def cli(ctx: click.Context, verbose: bool, config_path: Optional[str]):
    """Periodic solutions of functional differential equations by piecewise polynomial collocation."""
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    ctx.obj["config_path"] = config_path


@cli.command()
def problems():
    """List registered problems."""
    for name in available_problems():
        prob, _ = get_problem(name)
        click.echo(f"{name}: {prob.description}")


@cli.command()
@run_options
@click.option("--L", "L", type=int, default=None, help="Interval count (default: first of L_list)")
@click.option("--m", "m", type=int, default=None, help="Degree (default: first of m_list)")
@click.option("--save", type=click.Path(dir_okay=False), default=None, help="Solution file (default: in output dir)")
@click.option("--dump-dir", type=click.Path(file_okay=False), default=None, help="Write residual and Jacobian matrices here")
@click.option("--show-iterations", is_flag=True, help="Print Newton iterations")
@click.pass_context
def solve(
    ctx: click.Context, L: Optional[int], m: Optional[int], save: Optional[str], dump_dir: Optional[str], show_iterations: bool, **overrides
):
    """Solve one (L, m) cell at the configured y0."""
    try:
        config = _load_config(ctx, **overrides)
        L = L if L is not None else config.L_list[0]
        m = m if m is not None else config.m_list[0]
        stream = _echo_line if show_iterations else None

        prob, constraints_family = get_problem(config.problem)
        mesh = uniform_mesh(L, m, config.node_family)
        seed_x, seed_mesh = build_seed(config, prob, constraints_family, stream)
        x0 = resample(seed_x, seed_mesh, mesh, prob.n_y)
        outcome = solve_on_mesh(prob, constraints_family, config.y0, mesh, x0, config.newton, config.grid_points, stream)

        click.echo(f"Problem {prob.name}, y0={config.y0:g}, L={L}, m={m}")
        click.echo(f"  converged: {outcome.report.converged} ({outcome.report.message})")
        click.echo(f"  Newton iterations: {outcome.report.iterations}")
        click.echo(f"  T = {format_float(outcome.solution.period)}")
        for q, value in enumerate(outcome.solution.parameters, start=1):
            click.echo(f"  p{q} = {format_float(value)}")
        click.echo(f"  grid residual ({config.grid_points} points): {outcome.residual_max:.6e}")

        solution_path = Path(save) if save else config.output_path / f"solution_{prob.name}_L{L}_m{m}.txt"
        write_solution(solution_path, outcome.solution)
        plot_path = write_plot_script(
            "solution_profile",
            solution_path.with_name(f"plot_{solution_path.stem}.py"),
            solution_name=solution_path.name,
            solution_path=solution_path.resolve().as_posix(),
            output_path=solution_path.with_suffix(".png").resolve().as_posix(),
            title=f"{prob.name}, y0 = {config.y0:g}, L = {L}, m = {m}",
        )
        click.echo(f"Solution written to {solution_path}, plot script {plot_path}")

        if dump_dir:
            outcome.system.dump(outcome.report.final_x, dump_dir)
            click.echo(f"Residual and Jacobian written to {dump_dir}")

        if not outcome.report.converged:
            click.echo("Newton iteration did not converge", err=True)
            sys.exit(1)

    except Exception as e:
        click.echo(f"Error solving: {e}", err=True)
        sys.exit(1)


@cli.command()
@run_options
@click.option("--show-iterations", is_flag=True, help="Print Newton iterations")
@click.pass_context
def sweep(ctx: click.Context, show_iterations: bool, **overrides):
    """Convergence sweep over L_list x m_list with per-degree slope fits."""
    try:
        config = _load_config(ctx, **overrides)
        result = convergence_sweep(config, stream=_echo_line if show_iterations else None)

        click.echo("L,m,residual_max,T,p,newton_iters,converged")
        for record in result.records:
            click.echo(
                f"{record.L},{record.m},{record.residual_max:.6e},{record.T:.10g},{record.p:.10g},{record.newton_iters},{record.converged}"
            )
        for m, slope in result.slopes.items():
            click.echo(f"m={m}: fitted slope {slope:.3f}")
        click.echo(f"CSV: {result.csv_path}; plot script: {result.plot_path}")

        failed = [r for r in result.records if not r.converged]
        if failed:
            click.echo(f"{len(failed)} of {len(result.records)} cells failed", err=True)
            sys.exit(1)

    except Exception as e:
        click.echo(f"Error running sweep: {e}", err=True)
        sys.exit(1)


@cli.command("probe-stability")
@run_options
@click.option("--m", "m", type=int, default=None, help="Degree (default: largest of m_list)")
@click.pass_context
def probe_stability(ctx: click.Context, m: Optional[int], **overrides):
    """Smallest singular value and inverse norm of I - D Phi_L along L_list."""
    try:
        config = _load_config(ctx, **overrides)
        result = stability_sweep(config, m=m)

        click.echo("L,sigma_min,cstab_estimate")
        for L, sigma_min, cstab in result.rows:
            click.echo(f"{L},{sigma_min:.6e},{cstab:.6e}")
        click.echo(f"CSV: {result.csv_path}")

    except Exception as e:
        click.echo(f"Error probing stability: {e}", err=True)
        sys.exit(1)


@cli.command("verify-fixedpoint")
@run_options
@click.option("--tol", type=float, default=1e-8, show_default=True, help="Largest accepted ||Phi_L(x) - x||")
@click.pass_context
def verify_fixedpoint(ctx: click.Context, tol: float, **overrides):
    """Check that converged collocation solutions are fixed points of Phi_L."""
    try:
        config = _load_config(ctx, **overrides)
        result = fixed_point_sweep(config)

        click.echo("L,m,fixed_point_defect,alpha_defect")
        for L, m, defect, alpha_defect in result.rows:
            click.echo(f"{L},{m},{defect:.6e},{alpha_defect:.6e}")
        click.echo(f"CSV: {result.csv_path}")

        if math.isnan(result.max_defect) or any(math.isnan(row[2]) or row[2] > tol for row in result.rows):
            click.echo(f"Fixed-point check failed (tolerance {tol:g})", err=True)
            sys.exit(1)
        click.echo(f"All cells are fixed points within {tol:g}")

    except Exception as e:
        click.echo(f"Error verifying fixed points: {e}", err=True)
        sys.exit(1)


@cli.command()
@run_options
@click.option("--m", "m", type=int, default=None, help="Degree (default: smallest of m_list)")
@click.pass_context
def consistency(ctx: click.Context, m: Optional[int], **overrides):
    """Consistency error against a refined reference solution, with fitted order."""
    try:
        config = _load_config(ctx, **overrides)
        result = consistency_sweep(config, m=m)

        click.echo("L,consistency_error,sup_norm,lipschitz_norm")
        for L, value, sup_norm, lipschitz_norm in result.rows:
            click.echo(f"{L},{value:.6e},{sup_norm:.6e},{lipschitz_norm:.6e}")
        click.echo(f"fitted slope {result.slope:.3f}")
        click.echo(f"CSV: {result.csv_path}")

    except Exception as e:
        click.echo(f"Error measuring consistency: {e}", err=True)
        sys.exit(1)


def main():
    """Main CLI entry point."""
    cli()


if __name__ == "__main__":
    main()
