"""Single solves and convergence sweeps over (L, m) with grid residual measurement."""

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from periodic_fde.config.settings import RunConfig, SeedStrategy
from periodic_fde.core.collocation import CollocationSystem
from periodic_fde.core.mesh import Mesh, uniform_mesh
from periodic_fde.core.newton import NewtonConfig, NewtonReport, solve
from periodic_fde.core.polynomials import ExtendedVector, uniform_grid
from periodic_fde.core.problem import ConstraintFamily, ProblemDefinition, rhs_G
from periodic_fde.core.registry import get_problem
from periodic_fde.core.storage import read_solution
from periodic_fde.harness.output import write_csv, write_plot_script
from periodic_fde.harness.seeding import continue_in_y0, hopf_seed, resample
from periodic_fde.utils.helpers import format_duration

logger = logging.getLogger(__name__)

CONVERGENCE_HEADER = ("L", "m", "residual_max", "T", "p", "newton_iters", "converged")
SLOPES_HEADER = ("m", "fitted_slope", "expected_order", "cells_used")
# Cells whose residual sits at the Newton floor are excluded from slope fits
RESIDUAL_FLOOR = 1e-11


def residual_on_grid(prob: ProblemDefinition, solution: ExtendedVector, grid_points: int = 10001) -> float:
    """max over a uniform grid of |v'(t) - G(v, mu)(t)|.

    This is the unrescaled collocation residual; dividing by T gives the
    rescaled form y'/T - f(...).
    """
    grid = uniform_grid(grid_points)
    v = solution.v
    defects = v.derivative(grid) - rhs_G(prob, v, grid, solution.mu)
    return float(np.max(np.abs(defects)))


def fit_slope(Ls: Sequence[float], residuals: Sequence[float], floor: float = RESIDUAL_FLOOR) -> float:
    """Least-squares decay order -d log(residual) / d log(L); NaN with fewer than two usable cells."""
    Ls = np.asarray(Ls, dtype=float)
    residuals = np.asarray(residuals, dtype=float)
    usable = np.isfinite(residuals) & (residuals >= floor) & (Ls > 0)
    if np.count_nonzero(usable) < 2:
        return math.nan
    slope, _ = np.polyfit(np.log(Ls[usable]), np.log(residuals[usable]), 1)
    return float(-slope)


@dataclass
class ConvergenceRecord:
    L: int
    m: int
    residual_max: float
    T: float
    p: float
    newton_iters: int
    converged: bool
    fitted_slope: float = math.nan
    message: str = ""

    def row(self) -> Tuple:
        return (self.L, self.m, self.residual_max, self.T, self.p, self.newton_iters, self.converged)


@dataclass
class SolveOutcome:
    system: CollocationSystem
    report: NewtonReport
    solution: ExtendedVector
    residual_max: float

    @property
    def period(self) -> float:
        return self.solution.period

    def record(self) -> ConvergenceRecord:
        mesh = self.system.mesh
        p = float(self.solution.mu[1]) if self.solution.mu.size > 1 else math.nan
        return ConvergenceRecord(
            L=mesh.n_intervals,
            m=mesh.degree,
            residual_max=self.residual_max,
            T=self.period,
            p=p,
            newton_iters=self.report.iterations,
            converged=self.report.converged,
            message=self.report.message,
        )


@dataclass
class SweepResult:
    records: List[ConvergenceRecord]
    slopes: Dict[int, float] = field(default_factory=dict)
    csv_path: Optional[Path] = None
    slopes_path: Optional[Path] = None
    plot_path: Optional[Path] = None


def solve_on_mesh(
    prob: ProblemDefinition,
    constraints_family: ConstraintFamily,
    y0: float,
    mesh: Mesh,
    x0: np.ndarray,
    newton: NewtonConfig,
    grid_points: int = 10001,
    stream: Optional[Callable[[str], None]] = None,
) -> SolveOutcome:
    system = CollocationSystem(prob, constraints_family(y0), mesh)
    report = solve(system, x0, newton, stream=stream)
    solution = system.extended_vector(report.final_x)
    return SolveOutcome(system, report, solution, residual_on_grid(prob, solution, grid_points))


def build_seed(
    cfg: RunConfig,
    prob: ProblemDefinition,
    constraints_family: ConstraintFamily,
    stream: Optional[Callable[[str], None]] = None,
) -> Tuple[np.ndarray, Mesh]:
    """Initial guess at cfg.y0 together with the mesh it lives on."""
    seed = cfg.seed
    if seed.strategy is SeedStrategy.FILE:
        x = read_solution(seed.file)
        mesh = x.v.mesh
        logger.info(f"Seeding from {seed.file} ({mesh!r})")
        return np.concatenate([x.v.values.ravel(), x.mu]), mesh

    mesh = uniform_mesh(seed.intervals, seed.degree, cfg.node_family)
    if seed.strategy is SeedStrategy.HOPF:
        logger.info(f"Seeding from the Hopf approximation at y0={cfg.y0}")
        return hopf_seed(cfg.y0, mesh, prob.n_y, prob.n_p), mesh

    logger.info(f"Seeding by continuation y0 {seed.from_y0} -> {cfg.y0} in {seed.steps} steps on {mesh!r}")
    x = continue_in_y0(prob, constraints_family, seed.from_y0, cfg.y0, seed.steps, mesh, cfg.newton, stream=stream)
    return x, mesh


@dataclass
class CellResult:
    L: int
    m: int
    mesh: Mesh
    outcome: Optional[SolveOutcome] = None
    error: Optional[Exception] = None

    @property
    def converged(self) -> bool:
        return self.outcome is not None and self.outcome.report.converged

    def record(self) -> ConvergenceRecord:
        if self.outcome is None:
            message = f"{type(self.error).__name__}: {self.error}"
            return ConvergenceRecord(self.L, self.m, math.nan, math.nan, math.nan, 0, False, message=message)
        return self.outcome.record()


def solve_cells(
    cfg: RunConfig,
    prob: ProblemDefinition,
    constraints_family: ConstraintFamily,
    cells: Sequence[Tuple[int, int]],
    stream: Optional[Callable[[str], None]] = None,
) -> Iterator[CellResult]:
    """Solve (L, m) cells in order at cfg.y0, each seeded from the finest converged solution so far.

    Failures are yielded as results carrying the error instead of raising.
    """
    seed_x, seed_mesh = build_seed(cfg, prob, constraints_family, stream)
    best_x, best_mesh, best_converged = seed_x, seed_mesh, cfg.seed.strategy is not SeedStrategy.HOPF

    for L, m in cells:
        mesh = uniform_mesh(L, m, cfg.node_family)
        start = time.perf_counter()
        logger.info(f"Sweep cell L={L}, m={m}: starting")
        try:
            x0 = resample(best_x, best_mesh, mesh, prob.n_y)
            outcome = solve_on_mesh(prob, constraints_family, cfg.y0, mesh, x0, cfg.newton, cfg.grid_points, stream)
        except Exception as e:
            logger.error(f"Sweep cell L={L}, m={m} failed: {e}")
            yield CellResult(L, m, mesh, error=e)
            continue

        cell = CellResult(L, m, mesh, outcome=outcome)
        if not cell.converged:
            logger.error(f"Sweep cell L={L}, m={m} did not converge: {outcome.report.message}")
        else:
            if not best_converged or mesh.n_nodes >= best_mesh.n_nodes:
                best_x, best_mesh, best_converged = outcome.report.final_x, mesh, True
            logger.info(
                f"Sweep cell L={L}, m={m}: residual {outcome.residual_max:.3e}, T={outcome.period:.10g}, "
                f"{outcome.report.iterations} iterations in {format_duration(time.perf_counter() - start)}"
            )
        yield cell


def sweep_cells(cfg: RunConfig) -> List[Tuple[int, int]]:
    return [(L, m) for m in cfg.m_list for L in sorted(cfg.L_list)]


def convergence_sweep(cfg: RunConfig, stream: Optional[Callable[[str], None]] = None, write_outputs: bool = True) -> SweepResult:
    """Solve every (L, m) cell at cfg.y0, measure grid residuals and fit per-m slopes.

    Each cell starts from the finest converged solution so far, resampled
    onto the cell's mesh. Failed cells are recorded and the sweep continues.
    """
    cfg.validate()
    prob, constraints_family = get_problem(cfg.problem)
    records = [cell.record() for cell in solve_cells(cfg, prob, constraints_family, sweep_cells(cfg), stream)]

    slopes: Dict[int, float] = {}
    for m in cfg.m_list:
        cells = [r for r in records if r.m == m and r.converged]
        slopes[m] = fit_slope([r.L for r in cells], [r.residual_max for r in cells])
        for record in records:
            if record.m == m:
                record.fitted_slope = slopes[m]
        logger.info(f"Degree m={m}: fitted slope {slopes[m]:.3f} (expected {prob.expected_order(m)})")

    result = SweepResult(records=records, slopes=slopes)
    if write_outputs:
        write_sweep_outputs(cfg, prob, result)
    return result


def write_sweep_outputs(cfg: RunConfig, prob: ProblemDefinition, result: SweepResult) -> SweepResult:
    output = cfg.output_path
    result.csv_path = write_csv(output / "convergence.csv", CONVERGENCE_HEADER, [r.row() for r in result.records])
    result.slopes_path = write_csv(
        output / "slopes.csv",
        SLOPES_HEADER,
        [
            (m, slope, prob.expected_order(m), sum(1 for r in result.records if r.m == m and r.converged))
            for m, slope in result.slopes.items()
        ],
    )
    result.plot_path = write_plot_script(
        "convergence",
        output / "plot_convergence.py",
        csv_name=result.csv_path.name,
        csv_path=result.csv_path.resolve().as_posix(),
        output_path=(output / "convergence.png").resolve().as_posix(),
        grid_points=cfg.grid_points,
        title=f"{prob.name}, y0 = {cfg.y0:g}",
    )
    return result
