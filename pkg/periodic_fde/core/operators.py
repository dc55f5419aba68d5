"""Fixed-point form of the collocation problem and probes of its consistency and stability.

With g(x) = (t -> G(v, mu)(t), alpha, mu + R_aff[v, mu]) and the integral
operator L, collocation solutions are exactly the fixed points of
Phi_L = L o P_L o g. The probes measure the consistency error L (P_L - I) g
at a reference solution and the conditioning of I - D Phi_L.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve, svdvals

from periodic_fde.core.collocation import state_coupling_matrix
from periodic_fde.core.errors import MeshMismatchError, NonpositivePeriodError
from periodic_fde.core.mesh import SNAP_TOLERANCE, Mesh, gauss_legendre
from periodic_fde.core.polynomials import (
    DiscontinuousPiecewisePolynomial,
    ExtendedVector,
    PeriodicPiecewisePolynomial,
    integral_operator_L,
    integral_operator_matrix,
    norm_sup_grid,
    project_PL,
    uniform_grid,
)
from periodic_fde.core.problem import AffineConstraints, ProblemDefinition, linearize_rhs, rhs_G, rhs_G_jacobian_action

logger = logging.getLogger(__name__)

REFERENCE_REFINEMENT = 8
REFERENCE_DEGREE_BOOST = 2


def _check_period(x: ExtendedVector) -> None:
    if not x.period > 0.0:
        raise NonpositivePeriodError(x.period)


def apply_g(prob: ProblemDefinition, constraints: AffineConstraints, x: ExtendedVector, mesh: Optional[Mesh] = None) -> ExtendedVector:
    """g(x) with its first component sampled at the collocation nodes (which is P_L g).

    mesh defaults to the mesh of x.v.
    """
    _check_period(x)
    mesh = mesh or x.v.mesh
    w = project_PL(lambda t: rhs_G(prob, x.v, t, x.mu), mesh)
    nu = x.mu + constraints.evaluate(x.v, x.mu, mesh)
    return ExtendedVector(w, x.alpha.copy(), nu)


def apply_Phi_L(prob: ProblemDefinition, constraints: AffineConstraints, mesh: Mesh, x: ExtendedVector) -> ExtendedVector:
    """Phi_L(x) = L P_L g(x); the v component is a continuous periodic degree-m piecewise polynomial on mesh."""
    g = apply_g(prob, constraints, x, mesh)
    return integral_operator_L(g.v, g.alpha, g.mu)


def _constraint_linear_part(constraints: AffineConstraints, mesh: Mesh, dv, dmu: np.ndarray) -> np.ndarray:
    zero = PeriodicPiecewisePolynomial.zeros(mesh, dv.n_y)
    return constraints.evaluate(dv, dmu, mesh) - constraints.evaluate(zero, np.zeros_like(dmu), mesh)


def apply_DPhi_L(
    prob: ProblemDefinition, constraints: AffineConstraints, mesh: Mesh, x: ExtendedVector, dx: ExtendedVector
) -> ExtendedVector:
    """Directional derivative D Phi_L(x) dx through rhs_G_jacobian_action and the linear part of R_aff."""
    _check_period(x)
    points = mesh.collocation_nodes.ravel()
    dw = rhs_G_jacobian_action(prob, x.v, points, x.mu, dx.v, dx.mu)
    dnu = dx.mu + _constraint_linear_part(constraints, mesh, dx.v, dx.mu)
    return integral_operator_L(DiscontinuousPiecewisePolynomial(mesh, dw), dx.alpha, dnu)


@dataclass(frozen=True)
class FixedPointState:
    """An extended vector checked against Phi_L."""

    x: ExtendedVector
    phi: ExtendedVector
    defect: float
    alpha_defect: float

    def is_fixed_point(self, tol: float = 1e-8) -> bool:
        return self.defect <= tol


def fixed_point_check(
    prob: ProblemDefinition, constraints: AffineConstraints, mesh: Mesh, x: ExtendedVector, grid_points: int = 10001
) -> FixedPointState:
    """||Phi_L(x) - x|| in the sup-grid norm and |alpha - v(0)|."""
    phi = apply_Phi_L(prob, constraints, mesh, x)
    defect = norm_sup_grid(phi - x, grid_points)
    alpha_defect = float(np.max(np.abs(x.alpha - x.v.evaluate(0.0))))
    logger.debug(f"Fixed-point defect {defect:.3e}, alpha defect {alpha_defect:.3e} on {mesh!r}")
    return FixedPointState(x=x, phi=phi, defect=defect, alpha_defect=alpha_defect)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """D Phi_L(x) restricted to range(L P_L) + R^{n_y} + R^{n_mu}.

    Coordinates are (nodal values component-major, alpha, mu).
    """

    matrix: np.ndarray
    n_y: int
    n_nodes: int
    n_mu: int

    def __post_init__(self) -> None:
        n = self.n_y * self.n_nodes + self.n_y + self.n_mu
        if self.matrix.shape != (n, n):
            raise ValueError(f"Operator matrix must be {n}x{n}, got {self.matrix.shape}")
        if not np.all(np.isfinite(self.matrix)):
            raise ArithmeticError("Operator matrix contains non-finite entries")

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def coordinates(self, x: ExtendedVector) -> np.ndarray:
        return np.concatenate([np.asarray(x.v.values).ravel(), x.alpha, x.mu])

    def vector(self, z: np.ndarray, mesh: Mesh) -> ExtendedVector:
        n_state = self.n_y * self.n_nodes
        v = PeriodicPiecewisePolynomial(mesh, z[:n_state].reshape(self.n_y, self.n_nodes))
        return ExtendedVector(v, z[n_state : n_state + self.n_y], z[n_state + self.n_y :])

    def apply(self, z: np.ndarray) -> np.ndarray:
        return self.matrix @ z


def operator_matrix(prob: ProblemDefinition, constraints: AffineConstraints, mesh: Mesh, x: ExtendedVector) -> OperatorMatrix:
    """Assemble D Phi_L(x) = L_mat @ Dg_mat from the chain-rule coefficients at the collocation points."""
    _check_period(x)
    if not isinstance(x.v, PeriodicPiecewisePolynomial) or x.v.mesh is not mesh:
        x = ExtendedVector(PeriodicPiecewisePolynomial.interpolate(x.v, mesh), x.alpha, x.mu)

    n_y, n_nodes, n_mu = prob.n_y, mesh.n_nodes, x.mu.size
    n_state = n_y * n_nodes
    size = n_state + n_y + n_mu

    points = mesh.collocation_nodes.ravel()
    lin = linearize_rhs(prob, x.v, points, x.mu)
    C_v, C_mu = constraints.linear_coefficients(mesh, n_y, n_mu)

    # Dg: (c, alpha, mu) -> (w at collocation nodes, alpha, nu)
    Dg = np.zeros((size, size))
    Dg[:n_state, :n_state] = state_coupling_matrix(lin, mesh, n_y)
    Dg[:n_state, n_state + n_y :] = np.transpose(lin.parameter_coefficients, (0, 2, 1)).reshape(n_state, n_mu)
    Dg[n_state : n_state + n_y, n_state : n_state + n_y] = np.eye(n_y)
    Dg[n_state + n_y :, :n_state] = C_v
    Dg[n_state + n_y :, n_state + n_y :] = np.eye(n_mu) + C_mu

    # L: (w, alpha, nu) -> (alpha + W w, alpha + total w, nu)
    W, total = integral_operator_matrix(mesh)
    L_mat = np.zeros((size, size))
    L_mat[:n_state, :n_state] = np.kron(np.eye(n_y), W)
    L_mat[:n_state, n_state : n_state + n_y] = np.kron(np.eye(n_y), np.ones((n_nodes, 1)))
    L_mat[n_state : n_state + n_y, :n_state] = np.kron(np.eye(n_y), total[None, :])
    L_mat[n_state : n_state + n_y, n_state : n_state + n_y] = np.eye(n_y)
    L_mat[n_state + n_y :, n_state + n_y :] = np.eye(n_mu)

    return OperatorMatrix(matrix=L_mat @ Dg, n_y=n_y, n_nodes=n_nodes, n_mu=n_mu)


class StabilityEstimate(NamedTuple):
    sigma_min: float
    cstab_estimate: float
    sigma_min_euclidean: float


def stability_probe(prob: ProblemDefinition, constraints: AffineConstraints, mesh: Mesh, x: ExtendedVector) -> StabilityEstimate:
    """Lower and upper stability bounds of A = I - D Phi_L(x) in nodal coordinates.

    cstab_estimate is ||A^{-1}||_inf and sigma_min = 1 / cstab_estimate, the
    smallest value of ||A z||_inf / ||z||_inf. The Euclidean smallest singular
    value is reported as sigma_min_euclidean; it shrinks with the number of
    nodes. A singular matrix gives sigma_min = 0 and cstab_estimate = inf.
    """
    op = operator_matrix(prob, constraints, mesh, x)
    A = np.eye(op.size) - op.matrix
    sigma_euclidean = float(np.min(svdvals(A)))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(A)
    pivots = np.abs(np.diag(lu))
    if np.any(pivots <= 1e-14 * np.max(np.abs(np.triu(lu)), axis=1)):
        logger.warning(f"I - D Phi_L singular on {mesh!r} (Euclidean sigma_min {sigma_euclidean:.3e})")
        return StabilityEstimate(0.0, float("inf"), sigma_euclidean)

    inverse = lu_solve((lu, piv), np.eye(op.size))
    cstab = float(np.max(np.sum(np.abs(inverse), axis=1)))
    sigma_min = 1.0 / cstab
    logger.info(
        f"Stability probe on {mesh!r}: sigma_min {sigma_min:.6e}, cstab {cstab:.6e}, Euclidean sigma_min {sigma_euclidean:.6e}"
    )
    return StabilityEstimate(sigma_min, cstab, sigma_euclidean)


@dataclass(frozen=True)
class ConsistencyError:
    """Norms of L (P_L - I) g(x_ref); value = max(sup, Lipschitz) is the Lipschitz-norm estimate."""

    value: float
    sup_norm: float
    lipschitz_norm: float


def _integration_cells(grid: np.ndarray, *breakpoints: np.ndarray) -> np.ndarray:
    edges = np.unique(np.concatenate([grid, *breakpoints]))
    keep = np.concatenate([[True], np.diff(edges) > SNAP_TOLERANCE])
    return edges[keep]


def consistency_error(
    prob: ProblemDefinition,
    constraints: AffineConstraints,
    mesh: Mesh,
    x_ref: ExtendedVector,
    grid_points: int = 10001,
    quadrature_points: Optional[int] = None,
) -> ConsistencyError:
    """Sup-grid norm and Lipschitz estimate of L (P_L - I) g(x_ref).

    g(x_ref) is evaluated as a function through the reference solution, whose
    mesh must refine the target mesh. The mu component of the defect is zero
    since P_L only acts on the first component.
    """
    _check_period(x_ref)
    ref_mesh = getattr(x_ref.v, "mesh", None)
    if ref_mesh is None or not ref_mesh.refines(mesh):
        logger.error(f"Reference mesh {ref_mesh!r} does not refine {mesh!r}")
        raise MeshMismatchError(f"Reference mesh {ref_mesh!r} does not refine target {mesh!r}")
    if ref_mesh.n_intervals < REFERENCE_REFINEMENT * mesh.n_intervals or ref_mesh.degree < mesh.degree + REFERENCE_DEGREE_BOOST:
        logger.warning(f"Reference {ref_mesh!r} is coarser than recommended for target {mesh!r}")

    def G(t: np.ndarray) -> np.ndarray:
        return rhs_G(prob, x_ref.v, t, x_ref.mu)

    projected = project_PL(G, mesh)

    def defect(t: np.ndarray) -> np.ndarray:
        return projected(t) - G(t)

    grid = uniform_grid(grid_points)
    edges = _integration_cells(grid, mesh.breakpoints, ref_mesh.breakpoints)
    n_q = quadrature_points or mesh.degree + 3
    nodes, weights = gauss_legendre(n_q)
    widths = np.diff(edges)
    sample_points = (edges[:-1, None] + widths[:, None] * nodes[None, :]).ravel()
    sample_weights = (widths[:, None] * weights[None, :]).ravel()

    d = defect(sample_points)
    cell_integrals = (d * sample_weights[None, :]).reshape(d.shape[0], widths.size, n_q).sum(axis=2)
    cumulative = np.concatenate([np.zeros((d.shape[0], 1)), np.cumsum(cell_integrals, axis=1)], axis=1)
    total = cumulative[:, -1]

    # nearest edge; grid points closer than SNAP_TOLERANCE to a breakpoint were merged into it
    upper = np.searchsorted(edges, grid).clip(1, edges.size - 1)
    nearest = np.where(np.abs(edges[upper - 1] - grid) <= np.abs(edges[upper] - grid), upper - 1, upper)
    at_grid = cumulative[:, nearest]
    e_grid = at_grid - grid[None, :] * total[:, None]
    sup_norm = float(max(np.max(np.abs(e_grid)), np.max(np.abs(total))))

    slopes = np.concatenate([d, defect(grid)], axis=1) - total[:, None]
    lipschitz_norm = float(np.max(np.abs(slopes)))

    result = ConsistencyError(value=max(sup_norm, lipschitz_norm), sup_norm=sup_norm, lipschitz_norm=lipschitz_norm)
    logger.debug(f"Consistency error on {mesh!r}: {result}")
    return result
