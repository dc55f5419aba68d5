"""Damped Newton iteration with dense LU solves."""

import logging
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Protocol, Tuple

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from periodic_fde.core.errors import DelayEvaluationError, NonFiniteResidualError, NonpositivePeriodError, SingularJacobianError
from periodic_fde.utils.helpers import max_abs

logger = logging.getLogger(__name__)

# Relative pivot magnitude below which the Jacobian is treated as singular
PIVOT_TOLERANCE = 1e-14
ARMIJO_SLOPE = 1e-4


class Damping(Enum):
    NONE = "none"
    ARMIJO = "armijo"


@dataclass
class NewtonConfig:
    """Stopping and damping policy for solve()."""

    tol_residual: float = 1e-10
    tol_step: float = 1e-12
    max_iters: int = 50
    damping: Damping = Damping.ARMIJO
    backtracking_factor: float = 0.5
    max_halvings: int = 8

    def __post_init__(self) -> None:
        # YAML 1.1 loads 1e-10 as str
        self.tol_residual = float(self.tol_residual)
        self.tol_step = float(self.tol_step)
        self.max_iters = int(self.max_iters)
        self.backtracking_factor = float(self.backtracking_factor)
        self.max_halvings = int(self.max_halvings)
        if not isinstance(self.damping, Damping):
            self.damping = Damping(str(self.damping).lower())
        self.validate()

    def validate(self) -> None:
        if self.tol_residual <= 0 or self.tol_step <= 0:
            raise ValueError("Newton tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("newton.max_iters must be at least 1")
        if not 0.0 < self.backtracking_factor < 1.0:
            raise ValueError("newton.backtracking_factor must lie in (0, 1)")
        if self.max_halvings < 0:
            raise ValueError("newton.max_halvings must be non-negative")

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "NewtonConfig":
        data = dict(data or {})
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"Unknown newton settings: {', '.join(sorted(unknown))}")
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tol_residual": self.tol_residual,
            "tol_step": self.tol_step,
            "max_iters": self.max_iters,
            "damping": self.damping.value,
            "backtracking_factor": self.backtracking_factor,
            "max_halvings": self.max_halvings,
        }


@dataclass
class NewtonReport:
    """Outcome of a Newton run; history entry k belongs to the iterate after step k+1.

    The run stops on either criterion, but ``converged`` is set only when the
    inf-norm residual reaches ``tol_residual``. A step below ``tol_step`` with a
    larger residual ends the run with ``converged=False`` and a message starting
    "step below tolerance"; the caller decides whether that residual is acceptable.
    """

    converged: bool
    iterations: int
    residual_history: List[float]
    step_history: List[float]
    final_x: np.ndarray
    initial_residual: float
    message: str = ""
    damping_factors: List[float] = field(default_factory=list)

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1] if self.residual_history else self.initial_residual


class NonlinearSystem(Protocol):
    def residual(self, x: np.ndarray) -> np.ndarray: ...

    def jacobian(self, x: np.ndarray) -> np.ndarray: ...


def _period_index(system: Any) -> Optional[int]:
    layout = getattr(system, "layout", None)
    return layout.period_index if layout is not None else None


def _factorize(J: np.ndarray, iteration: int) -> Tuple[np.ndarray, np.ndarray]:
    """LU with partial pivoting; raises SingularJacobianError on a tiny relative pivot."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(J, check_finite=True)
    row_scale = np.max(np.abs(np.triu(lu)), axis=1)
    pivots = np.abs(np.diag(lu))
    if np.any(pivots <= PIVOT_TOLERANCE * row_scale) or np.any(row_scale == 0.0):
        logger.error(f"Jacobian singular at iteration {iteration} (smallest pivot {np.min(pivots):.3e})")
        raise SingularJacobianError(iteration)
    return lu, piv


def _try_residual(system: NonlinearSystem, x: np.ndarray) -> Optional[np.ndarray]:
    try:
        F = system.residual(x)
    except (NonpositivePeriodError, NonFiniteResidualError, DelayEvaluationError) as e:
        logger.debug(f"Rejected trial point: {e}")
        return None
    return F if np.all(np.isfinite(F)) else None


def solve(
    system: NonlinearSystem,
    x0: np.ndarray,
    cfg: Optional[NewtonConfig] = None,
    stream: Optional[Callable[[str], None]] = None,
) -> NewtonReport:
    """Iterate x <- x - lambda J(x)^{-1} F(x) until ||F||_inf <= tol_residual.

    A step of inf-norm <= tol_step stops the iteration; the report is marked
    converged only when the residual tolerance holds as well. Trial points
    with T <= 0 or non-finite residuals are rejected and the step halved.
    Each iteration is logged as 'iter k residual r step s' (INFO when a stream
    callback is given, DEBUG otherwise) and passed to the stream.
    """
    cfg = cfg or NewtonConfig()
    x = np.array(x0, dtype=float)
    period_index = _period_index(system)
    if period_index is not None and not x[period_index] > 0.0:
        raise NonpositivePeriodError(float(x[period_index]))

    level = logging.INFO if stream is not None else logging.DEBUG
    F = system.residual(x)
    residual = max_abs(F)
    report = NewtonReport(
        converged=residual <= cfg.tol_residual,
        iterations=0,
        residual_history=[],
        step_history=[],
        final_x=x,
        initial_residual=residual,
    )
    if report.converged:
        report.message = "initial guess satisfies residual tolerance"
        return report

    for k in range(1, cfg.max_iters + 1):
        lu_piv = _factorize(system.jacobian(x), k)
        delta = lu_solve(lu_piv, F)

        lam = 1.0
        accepted: Optional[Tuple[np.ndarray, np.ndarray, float, float]] = None
        fallback: Optional[Tuple[np.ndarray, np.ndarray, float, float]] = None
        for _ in range(cfg.max_halvings + 1):
            trial = x - lam * delta
            F_trial = None
            if period_index is None or trial[period_index] > 0.0:
                F_trial = _try_residual(system, trial)
            if F_trial is not None:
                candidate = (trial, F_trial, max_abs(F_trial), lam)
                if fallback is None or candidate[2] < fallback[2]:
                    fallback = candidate
                if cfg.damping is Damping.NONE or candidate[2] <= (1.0 - ARMIJO_SLOPE * lam) * residual:
                    accepted = candidate
                    break
            lam *= cfg.backtracking_factor

        if accepted is None:
            accepted = fallback
        if accepted is None:
            report.message = f"no admissible step at iteration {k}"
            logger.warning(f"Newton stopped: {report.message}")
            break

        x, F, residual, lam = accepted
        step = lam * max_abs(delta)
        report.iterations = k
        report.residual_history.append(residual)
        report.step_history.append(step)
        report.damping_factors.append(lam)
        report.final_x = x

        line = f"iter {k} residual {residual:.6e} step {step:.6e}"
        logger.log(level, line)
        if stream is not None:
            stream(line)

        if residual <= cfg.tol_residual:
            report.converged = True
            report.message = f"residual tolerance reached after {k} iterations"
            break
        if step <= cfg.tol_step:
            report.message = f"step below tolerance at iteration {k} with residual {residual:.3e}"
            logger.warning(f"Newton stagnated: {report.message}")
            break
    else:
        report.message = f"no convergence within {cfg.max_iters} iterations"
        logger.warning(f"Newton: {report.message} (residual {residual:.3e})")

    return report
