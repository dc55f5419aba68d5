"""Operator-form experiments: fixed-point equivalence, consistency order and stability trends."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Tuple

import numpy as np

from periodic_fde.config.settings import RunConfig
from periodic_fde.core.errors import PeriodicFDEError
from periodic_fde.core.mesh import uniform_mesh
from periodic_fde.core.newton import NewtonConfig
from periodic_fde.core.operators import consistency_error, fixed_point_check, stability_probe
from periodic_fde.core.polynomials import ExtendedVector
from periodic_fde.core.registry import get_problem
from periodic_fde.harness.output import write_csv, write_plot_script
from periodic_fde.harness.seeding import resample
from periodic_fde.harness.sweep import SLOPES_HEADER, build_seed, fit_slope, solve_cells, solve_on_mesh, sweep_cells

logger = logging.getLogger(__name__)

STABILITY_HEADER = ("L", "sigma_min", "cstab_estimate")
CONSISTENCY_HEADER = ("L", "consistency_error", "sup_norm", "lipschitz_norm")
FIXED_POINT_HEADER = ("L", "m", "fixed_point_defect", "alpha_defect")
REFERENCE_TOLERANCE = 1e-12
# Accepted for a reference solve that stagnates just above REFERENCE_TOLERANCE
REFERENCE_FALLBACK_TOLERANCE = 1e-9


@dataclass
class ExperimentResult:
    rows: List[Tuple]
    csv_path: Optional[Path] = None
    slope: float = float("nan")
    max_defect: float = float("nan")
    extra_paths: List[Path] = field(default_factory=list)


def _degree(cfg: RunConfig, m: Optional[int]) -> int:
    return int(m) if m is not None else max(cfg.m_list)


def stability_sweep(
    cfg: RunConfig, m: Optional[int] = None, stream: Optional[Callable[[str], None]] = None, write_outputs: bool = True
) -> ExperimentResult:
    """(L, sigma_min, cstab_estimate) at converged solutions for every L at degree m."""
    cfg.validate()
    m = _degree(cfg, m)
    prob, constraints_family = get_problem(cfg.problem)
    constraints = constraints_family(cfg.y0)

    rows: List[Tuple] = []
    for cell in solve_cells(cfg, prob, constraints_family, [(L, m) for L in sorted(cfg.L_list)], stream):
        if not cell.converged:
            rows.append((cell.L, float("nan"), float("nan")))
            continue
        estimate = stability_probe(prob, constraints, cell.mesh, cell.outcome.solution)
        rows.append((cell.L, estimate.sigma_min, estimate.cstab_estimate))

    result = ExperimentResult(rows=rows)
    if write_outputs:
        result.csv_path = write_csv(cfg.output_path / f"stability_m{m}.csv", STABILITY_HEADER, rows)
    return result


def reference_solution(cfg: RunConfig, m: int, stream: Optional[Callable[[str], None]] = None) -> ExtendedVector:
    """High-accuracy solution on L_ref = reference_factor * max(L), m_ref = m + reference_degree_boost."""
    prob, constraints_family = get_problem(cfg.problem)
    L_ref = cfg.reference_factor * max(cfg.L_list)
    m_ref = m + cfg.reference_degree_boost
    mesh = uniform_mesh(L_ref, m_ref, cfg.node_family)
    newton = NewtonConfig(**{**cfg.newton.to_dict(), "tol_residual": min(cfg.newton.tol_residual, REFERENCE_TOLERANCE)})

    seed_x, seed_mesh = build_seed(cfg, prob, constraints_family, stream)
    logger.info(f"Computing reference solution on {mesh!r}")
    outcome = solve_on_mesh(
        prob, constraints_family, cfg.y0, mesh, resample(seed_x, seed_mesh, mesh, prob.n_y), newton, cfg.grid_points, stream
    )
    if not outcome.report.converged:
        if outcome.report.final_residual > REFERENCE_FALLBACK_TOLERANCE:
            logger.error(f"Reference solve failed: {outcome.report.message}")
            raise PeriodicFDEError(f"reference solution did not converge: {outcome.report.message}")
        logger.warning(f"Reference solve stopped at residual {outcome.report.final_residual:.3e}; using it")
    return outcome.solution


def consistency_sweep(
    cfg: RunConfig, m: Optional[int] = None, stream: Optional[Callable[[str], None]] = None, write_outputs: bool = True
) -> ExperimentResult:
    """Consistency error of the degree-m projection at the reference solution for every L, with fitted slope."""
    cfg.validate()
    m = int(m) if m is not None else min(cfg.m_list)
    prob, constraints_family = get_problem(cfg.problem)
    constraints = constraints_family(cfg.y0)
    x_ref = reference_solution(cfg, m, stream)

    rows: List[Tuple] = []
    for L in sorted(cfg.L_list):
        error = consistency_error(prob, constraints, uniform_mesh(L, m, cfg.node_family), x_ref, cfg.grid_points)
        logger.info(f"Consistency L={L}, m={m}: {error.value:.6e} (sup {error.sup_norm:.3e}, Lip {error.lipschitz_norm:.3e})")
        rows.append((L, error.value, error.sup_norm, error.lipschitz_norm))

    slope = fit_slope([row[0] for row in rows], [row[1] for row in rows], floor=np.finfo(float).tiny)
    logger.info(f"Consistency slope for m={m}: {slope:.3f} (expected {prob.expected_order(m)})")

    result = ExperimentResult(rows=rows, slope=slope)
    if write_outputs:
        output = cfg.output_path
        result.csv_path = write_csv(output / f"consistency_m{m}.csv", CONSISTENCY_HEADER, rows)
        result.extra_paths.append(
            write_csv(output / f"consistency_slope_m{m}.csv", SLOPES_HEADER, [(m, slope, prob.expected_order(m), len(rows))])
        )
        result.extra_paths.append(
            write_plot_script(
                "consistency",
                output / f"plot_consistency_m{m}.py",
                csv_name=result.csv_path.name,
                csv_path=result.csv_path.resolve().as_posix(),
                output_path=(output / f"consistency_m{m}.png").resolve().as_posix(),
                degree=m,
                title=f"{prob.name} consistency error, m = {m}",
            )
        )
    return result


def fixed_point_sweep(
    cfg: RunConfig, stream: Optional[Callable[[str], None]] = None, write_outputs: bool = True
) -> ExperimentResult:
    """Solve every (L, m) cell and measure ||Phi_L(x) - x|| and |alpha - v(0)| at the lifted solution."""
    cfg.validate()
    prob, constraints_family = get_problem(cfg.problem)
    constraints = constraints_family(cfg.y0)

    rows: List[Tuple] = []
    for cell in solve_cells(cfg, prob, constraints_family, sweep_cells(cfg), stream):
        if not cell.converged:
            rows.append((cell.L, cell.m, float("nan"), float("nan")))
            continue
        state = fixed_point_check(prob, constraints, cell.mesh, cell.outcome.solution, cfg.grid_points)
        logger.info(f"Fixed point L={cell.L}, m={cell.m}: defect {state.defect:.3e}, alpha defect {state.alpha_defect:.3e}")
        rows.append((cell.L, cell.m, state.defect, state.alpha_defect))

    defects = np.array([row[2] for row in rows], dtype=float)
    max_defect = float(np.nanmax(defects)) if np.any(np.isfinite(defects)) else float("nan")
    result = ExperimentResult(rows=rows, max_defect=max_defect)
    if write_outputs:
        result.csv_path = write_csv(cfg.output_path / "fixed_point.csv", FIXED_POINT_HEADER, rows)
    return result
