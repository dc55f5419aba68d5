"""Starting guesses: Hopf seeds, mesh resampling and natural continuation in the amplitude y0."""

import logging
import math
from typing import Callable, Optional

import numpy as np

from periodic_fde.core.collocation import CollocationSystem, UnknownLayout
from periodic_fde.core.errors import ContinuationError, PeriodicFDEError
from periodic_fde.core.mesh import Mesh
from periodic_fde.core.newton import NewtonConfig, solve
from periodic_fde.core.polynomials import PeriodicPiecewisePolynomial
from periodic_fde.core.problem import ConstraintFamily, ProblemDefinition

logger = logging.getLogger(__name__)

HOPF_PERIOD = 2.0 * math.pi
HOPF_DELAY = 0.5 * math.pi


def hopf_seed(y0: float, mesh: Mesh, n_y: int = 1, n_p: int = 1) -> np.ndarray:
    """y^L = interpolant of y0 sin(2 pi t) in the first component, T = 2 pi, p = pi/2."""
    layout = UnknownLayout(n_y=n_y, n_nodes=mesh.n_nodes, n_p=n_p)
    values = np.zeros((n_y, mesh.n_nodes))
    values[0] = y0 * np.sin(2.0 * np.pi * mesh.global_nodes)
    mu = np.zeros(layout.n_mu)
    mu[0] = HOPF_PERIOD
    if n_p > 0:
        mu[1] = HOPF_DELAY
    return layout.pack(values, mu)


def resample(x: np.ndarray, source_mesh: Mesh, target_mesh: Mesh, n_y: int = 1) -> np.ndarray:
    """Evaluate the source solution at the target mesh's representation nodes; (T, p) carried over."""
    x = np.asarray(x, dtype=float)
    n_state = n_y * source_mesh.n_nodes
    if x.size <= n_state:
        raise ValueError(f"Flat vector of size {x.size} too short for {n_y} components on {source_mesh!r}")
    source = PeriodicPiecewisePolynomial(source_mesh, x[:n_state].reshape(n_y, source_mesh.n_nodes))
    target = source.resample(target_mesh)
    return np.concatenate([target.values.ravel(), x[n_state:]])


def continue_in_y0(
    prob: ProblemDefinition,
    constraints_family: ConstraintFamily,
    from_y0: float,
    to_y0: float,
    steps: int,
    mesh: Mesh,
    cfg: Optional[NewtonConfig] = None,
    x0: Optional[np.ndarray] = None,
    stream: Optional[Callable[[str], None]] = None,
) -> np.ndarray:
    """Natural continuation along y0 in equal steps, each Newton-corrected from the previous solution.

    x0 defaults to hopf_seed(from_y0). With from_y0 == to_y0 this is a single solve.
    """
    if steps < 1:
        raise ValueError(f"Continuation needs at least one step, got {steps}")
    cfg = cfg or NewtonConfig()

    x = np.array(x0, dtype=float) if x0 is not None else hopf_seed(from_y0, mesh, prob.n_y, prob.n_p)
    ramp = [from_y0] if from_y0 == to_y0 else list(np.linspace(from_y0, to_y0, steps + 1))

    for y0 in ramp:
        system = CollocationSystem(prob, constraints_family(float(y0)), mesh)
        try:
            report = solve(system, x, cfg, stream=stream)
        except (PeriodicFDEError, ArithmeticError, ValueError) as e:
            logger.error(f"Continuation failed at y0={y0:.6g}: {e}")
            raise ContinuationError(float(y0), str(e)) from e
        if not report.converged:
            logger.error(f"Continuation failed at y0={y0:.6g}: {report.message}")
            raise ContinuationError(float(y0), report.message)
        x = report.final_x
        logger.info(f"Continuation y0={y0:.6g}: T={x[system.layout.period_index]:.10g} after {report.iterations} iterations")

    return x
