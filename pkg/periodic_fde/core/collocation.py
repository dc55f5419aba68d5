"""Square collocation system for periodic solutions: residual and dense Jacobian.

Unknowns are the nodal values of y^L (component-major: component c, global
node k at flat index c*m*L + k), followed by T and then p. Residual rows are
the FDE defects at the collocation points t_{i,j} in the same component-major
order, followed by the affine constraint residuals.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from periodic_fde.core.errors import NonFiniteResidualError, NonpositivePeriodError
from periodic_fde.core.mesh import Mesh
from periodic_fde.core.polynomials import ExtendedVector, PeriodicPiecewisePolynomial
from periodic_fde.core.problem import AffineConstraints, ProblemDefinition, RhsLinearization, linearize_rhs, rhs_G
from periodic_fde.core.storage import write_matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class UnknownLayout:
    """Flat index map of (nodal values, T, p)."""

    n_y: int
    n_nodes: int
    n_p: int

    @classmethod
    def for_problem(cls, prob: ProblemDefinition, mesh: Mesh) -> "UnknownLayout":
        return cls(n_y=prob.n_y, n_nodes=mesh.n_nodes, n_p=prob.n_p)

    @property
    def n_state(self) -> int:
        return self.n_y * self.n_nodes

    @property
    def n_mu(self) -> int:
        return self.n_p + 1

    @property
    def n_unknowns(self) -> int:
        return self.n_state + self.n_mu

    @property
    def period_index(self) -> int:
        return self.n_state

    def index(self, component: int, node: int) -> int:
        if not (0 <= component < self.n_y and 0 <= node < self.n_nodes):
            raise IndexError(f"(component={component}, node={node}) outside layout {self}")
        return component * self.n_nodes + node

    def parameter_index(self, q: int) -> int:
        if not 0 <= q < self.n_p:
            raise IndexError(f"Parameter index {q} outside layout {self}")
        return self.n_state + 1 + q

    def split(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(nodal values (n_y, m*L), mu) views of a flat unknown vector."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_unknowns,):
            raise ValueError(f"Expected {self.n_unknowns} unknowns, got shape {x.shape}")
        return x[: self.n_state].reshape(self.n_y, self.n_nodes), x[self.n_state :]

    def pack(self, values: np.ndarray, mu: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float).reshape(self.n_y, self.n_nodes)
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        if mu.size != self.n_mu:
            raise ValueError(f"Expected {self.n_mu} entries in mu, got {mu.size}")
        return np.concatenate([values.ravel(), mu])


@dataclass(frozen=True, eq=False)
class CollocationResidual:
    values: np.ndarray
    n_fde: int

    @property
    def fde_block(self) -> np.ndarray:
        return self.values[: self.n_fde]

    @property
    def constraint_block(self) -> np.ndarray:
        return self.values[self.n_fde :]

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.values), initial=0.0))


def _check_constraints(prob: ProblemDefinition, constraints: AffineConstraints) -> None:
    if constraints.n_c != prob.n_mu:
        raise ValueError(f"Need n_p + 1 = {prob.n_mu} constraints for a square system, got {constraints.n_c}")


def _unpack(prob: ProblemDefinition, mesh: Mesh, x: np.ndarray) -> Tuple[UnknownLayout, PeriodicPiecewisePolynomial, np.ndarray]:
    layout = UnknownLayout.for_problem(prob, mesh)
    values, mu = layout.split(x)
    if not mu[0] > 0.0:
        raise NonpositivePeriodError(float(mu[0]))
    return layout, PeriodicPiecewisePolynomial(mesh, values), mu.copy()


def _raise_non_finite(defects: np.ndarray, mesh: Mesh) -> None:
    component, point = np.argwhere(~np.isfinite(defects))[0]
    interval, node = divmod(int(point), mesh.degree)
    logger.error(f"Non-finite collocation residual at interval {interval}, node {node}, component {component}")
    raise NonFiniteResidualError(interval, node, int(component))


def assemble_residual(prob: ProblemDefinition, constraints: AffineConstraints, mesh: Mesh, x: np.ndarray) -> CollocationResidual:
    """(y^L)'(t_{i,j}) - G(y^L, T, p)(t_{i,j}) at every collocation point, then R_aff[y^L, mu]."""
    _check_constraints(prob, constraints)
    layout, y, mu = _unpack(prob, mesh, x)
    points = mesh.collocation_nodes.ravel()

    defects = y.derivative(points) - rhs_G(prob, y, points, mu)
    if not np.all(np.isfinite(defects)):
        _raise_non_finite(defects, mesh)

    tail = constraints.evaluate(y, mu, mesh)
    return CollocationResidual(values=np.concatenate([defects.ravel(), tail]), n_fde=layout.n_state)


def state_coupling_matrix(lin: RhsLinearization, mesh: Mesh, n_y: int) -> np.ndarray:
    """Matrix of dv -> sum_l K_l dv(theta_l) in nodal coordinates, shape (n_y*N, n_y*m*L) for N points."""
    n_points = lin.thetas.shape[1]
    coupling = np.zeros((n_y * n_points, n_y * mesh.n_nodes))
    point_rows = np.arange(n_points)[:, None]
    for theta, K in zip(lin.thetas, lin.state_coefficients):
        idx, rows = mesh.value_basis(theta)
        for a in range(n_y):
            for b in range(n_y):
                np.add.at(
                    coupling,
                    (a * n_points + point_rows, b * mesh.n_nodes + idx),
                    K[a, b][:, None] * rows,
                )
    return coupling


def assemble_jacobian(prob: ProblemDefinition, constraints: AffineConstraints, mesh: Mesh, x: np.ndarray) -> np.ndarray:
    """Dense Jacobian of assemble_residual, built structurally from the chain-rule coefficients."""
    _check_constraints(prob, constraints)
    layout, y, mu = _unpack(prob, mesh, x)
    points = mesh.collocation_nodes.ravel()
    n_points = points.size
    n_state = layout.n_state

    J = np.zeros((layout.n_unknowns, layout.n_unknowns))

    idx, rows = mesh.derivative_basis(points)
    point_rows = np.arange(n_points)[:, None]
    for c in range(prob.n_y):
        np.add.at(J, (c * n_points + point_rows, c * mesh.n_nodes + idx), rows)

    lin = linearize_rhs(prob, y, points, mu)
    J[:n_state, :n_state] -= state_coupling_matrix(lin, mesh, prob.n_y)
    J[:n_state, n_state:] = -np.transpose(lin.parameter_coefficients, (0, 2, 1)).reshape(n_state, layout.n_mu)

    C_v, C_mu = constraints.linear_coefficients(mesh, prob.n_y, layout.n_mu)
    J[n_state:, :n_state] = C_v
    J[n_state:, n_state:] = C_mu

    if not np.all(np.isfinite(J)):
        logger.error(f"Non-finite Jacobian entries for {mesh!r}")
        raise ArithmeticError("Collocation Jacobian contains non-finite entries")
    return J


class CollocationSystem:
    """A problem, its constraints and a mesh bound together as F(x) = 0."""

    def __init__(self, prob: ProblemDefinition, constraints: AffineConstraints, mesh: Mesh):
        _check_constraints(prob, constraints)
        self.prob = prob
        self.constraints = constraints
        self.mesh = mesh
        self.layout = UnknownLayout.for_problem(prob, mesh)

    def __repr__(self) -> str:
        return f"CollocationSystem(problem={self.prob.name}, {self.mesh!r}, unknowns={self.layout.n_unknowns})"

    def residual(self, x: np.ndarray) -> np.ndarray:
        return assemble_residual(self.prob, self.constraints, self.mesh, x).values

    def residual_report(self, x: np.ndarray) -> CollocationResidual:
        return assemble_residual(self.prob, self.constraints, self.mesh, x)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return assemble_jacobian(self.prob, self.constraints, self.mesh, x)

    def polynomial(self, x: np.ndarray) -> PeriodicPiecewisePolynomial:
        values, _ = self.layout.split(x)
        return PeriodicPiecewisePolynomial(self.mesh, values)

    def extended_vector(self, x: np.ndarray) -> ExtendedVector:
        """Lift to (v, v(0), mu)."""
        v = self.polynomial(x)
        _, mu = self.layout.split(x)
        return ExtendedVector(v, v.evaluate(0.0), mu.copy())

    def flatten(self, x: ExtendedVector) -> np.ndarray:
        v = x.v if x.v.mesh is self.mesh else x.v.resample(self.mesh)
        return self.layout.pack(v.values, x.mu)

    def dump(self, x: np.ndarray, directory: Union[str, Path]) -> Tuple[Path, Path]:
        """Write residual and Jacobian as plain-text matrices for debugging."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        residual_path = write_matrix(directory / "residual.txt", self.residual(x)[:, None])
        jacobian_path = write_matrix(directory / "jacobian.txt", self.jacobian(x))
        logger.info(f"Dumped residual and Jacobian of {self!r} to {directory}")
        return residual_path, jacobian_path
