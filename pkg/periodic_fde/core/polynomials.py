"""Algebra of 1-periodic piecewise polynomials on a Mesh.

This module handles:
- Continuous periodic piecewise polynomials of degree m (the unknown y^L)
- Discontinuous piecewise polynomials of degree m-1 (the range of P_L)
- The interpolation projection P_L and the integral operator L
- Sup-grid and Lipschitz norm estimates of extended vectors (v, alpha, mu)

All values are immutable and every operation is pure.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Tuple, Union

import numpy as np

from periodic_fde.core.mesh import Mesh, barycentric_matrix

logger = logging.getLogger(__name__)

PeriodicFunction = Callable[[np.ndarray], np.ndarray]


def _check_same_mesh(a: "PeriodicPiecewisePolynomial", b: "PeriodicPiecewisePolynomial") -> None:
    if a.mesh is not b.mesh and not (
        a.mesh.degree == b.mesh.degree
        and a.mesh.family is b.mesh.family
        and np.array_equal(a.mesh.breakpoints, b.mesh.breakpoints)
    ):
        raise ValueError(f"Piecewise polynomials live on different meshes: {a.mesh!r} vs {b.mesh!r}")


class PeriodicPiecewisePolynomial:
    """Continuous, 1-periodic, degree-m piecewise polynomial stored by its global nodal values.

    values has shape (n_y, m*L); column i*m+k is the value at the k-th
    representation node of interval i, so neighbouring intervals share their
    common endpoint and t_L is identified with t_0.
    """

    def __init__(self, mesh: Mesh, values: np.ndarray):
        values = np.atleast_2d(np.array(values, dtype=float))
        if values.ndim != 2 or values.shape[1] != mesh.n_nodes:
            raise ValueError(f"Expected nodal values of shape (n_y, {mesh.n_nodes}), got {values.shape}")
        values.setflags(write=False)
        self.mesh = mesh
        self.values = values

    def __repr__(self) -> str:
        return f"PeriodicPiecewisePolynomial(n_y={self.n_y}, {self.mesh!r})"

    @property
    def n_y(self) -> int:
        return self.values.shape[0]

    @classmethod
    def interpolate(cls, fun: PeriodicFunction, mesh: Mesh) -> "PeriodicPiecewisePolynomial":
        """Nodal interpolant of a periodic function (callable on arrays of times)."""
        return cls(mesh, np.atleast_2d(fun(mesh.global_nodes)))

    @classmethod
    def zeros(cls, mesh: Mesh, n_y: int = 1) -> "PeriodicPiecewisePolynomial":
        return cls(mesh, np.zeros((n_y, mesh.n_nodes)))

    def __call__(self, t: Union[float, np.ndarray]) -> np.ndarray:
        """Values at an array of times, shape (n_y, N)."""
        idx, rows = self.mesh.value_basis(t)
        return np.einsum("ynk,nk->yn", self.values[:, idx], rows)

    def evaluate(self, t: float) -> np.ndarray:
        return self(np.array([t]))[:, 0]

    def derivative(self, t: Union[float, np.ndarray]) -> np.ndarray:
        """Derivatives at an array of times, LEFT piece at breakpoints, shape (n_y, N)."""
        idx, rows = self.mesh.derivative_basis(t)
        return np.einsum("ynk,nk->yn", self.values[:, idx], rows)

    def derivative_at(self, t: float) -> np.ndarray:
        return self.derivative(np.array([t]))[:, 0]

    def interval_derivatives(self, sigmas: np.ndarray) -> np.ndarray:
        """Derivative of every piece at local coordinates sigmas, shape (n_y, L, S); no breakpoint tie-break."""
        mesh = self.mesh
        rows = barycentric_matrix(mesh.reference_representation, mesh.representation_weights, sigmas)
        rows = rows @ mesh.representation_derivative
        pieces = self.values[:, mesh.node_index]
        return np.einsum("ylk,sk->yls", pieces, rows) / mesh.widths[None, :, None]

    def resample(self, mesh: Mesh) -> "PeriodicPiecewisePolynomial":
        """Evaluate at another mesh's representation nodes."""
        return PeriodicPiecewisePolynomial.interpolate(self, mesh)

    def __add__(self, other: "PeriodicPiecewisePolynomial") -> "PeriodicPiecewisePolynomial":
        _check_same_mesh(self, other)
        return PeriodicPiecewisePolynomial(self.mesh, self.values + other.values)

    def __sub__(self, other: "PeriodicPiecewisePolynomial") -> "PeriodicPiecewisePolynomial":
        _check_same_mesh(self, other)
        return PeriodicPiecewisePolynomial(self.mesh, self.values - other.values)

    def __mul__(self, scalar: float) -> "PeriodicPiecewisePolynomial":
        return PeriodicPiecewisePolynomial(self.mesh, scalar * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "PeriodicPiecewisePolynomial":
        return PeriodicPiecewisePolynomial(self.mesh, -self.values)


class DiscontinuousPiecewisePolynomial:
    """Periodic piecewise polynomial of degree m-1 stored by its values at the collocation nodes.

    May jump at breakpoints; evaluation on a breakpoint uses the LEFT interval.
    """

    def __init__(self, mesh: Mesh, values: np.ndarray):
        values = np.atleast_2d(np.array(values, dtype=float))
        if values.ndim != 2 or values.shape[1] != mesh.n_nodes:
            raise ValueError(f"Expected collocation values of shape (n_y, {mesh.n_nodes}), got {values.shape}")
        values.setflags(write=False)
        self.mesh = mesh
        self.values = values

    def __repr__(self) -> str:
        return f"DiscontinuousPiecewisePolynomial(n_y={self.n_y}, {self.mesh!r})"

    @property
    def n_y(self) -> int:
        return self.values.shape[0]

    def __call__(self, t: Union[float, np.ndarray]) -> np.ndarray:
        mesh = self.mesh
        idx, sigma = mesh.locate(t)
        rows = barycentric_matrix(mesh.reference_collocation, mesh.collocation_weights, sigma)
        pieces = self.values.reshape(self.n_y, mesh.n_intervals, mesh.degree)[:, idx, :]
        return np.einsum("ynj,nj->yn", pieces, rows)

    def evaluate(self, t: float) -> np.ndarray:
        return self(np.array([t]))[:, 0]

    def __add__(self, other: "DiscontinuousPiecewisePolynomial") -> "DiscontinuousPiecewisePolynomial":
        return DiscontinuousPiecewisePolynomial(self.mesh, self.values + other.values)

    def __sub__(self, other: "DiscontinuousPiecewisePolynomial") -> "DiscontinuousPiecewisePolynomial":
        return DiscontinuousPiecewisePolynomial(self.mesh, self.values - other.values)

    def __mul__(self, scalar: float) -> "DiscontinuousPiecewisePolynomial":
        return DiscontinuousPiecewisePolynomial(self.mesh, scalar * self.values)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class ExtendedVector:
    """x = (v, alpha, mu) with mu = (T, p)."""

    v: Union[PeriodicPiecewisePolynomial, DiscontinuousPiecewisePolynomial]
    alpha: np.ndarray
    mu: np.ndarray

    def __post_init__(self) -> None:
        alpha = np.atleast_1d(np.array(self.alpha, dtype=float))
        mu = np.atleast_1d(np.array(self.mu, dtype=float))
        if mu.size < 1:
            raise ValueError("Parameter vector mu needs at least the period T")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "mu", mu)

    @property
    def period(self) -> float:
        return float(self.mu[0])

    @property
    def parameters(self) -> np.ndarray:
        return self.mu[1:]

    def __add__(self, other: "ExtendedVector") -> "ExtendedVector":
        return ExtendedVector(self.v + other.v, self.alpha + other.alpha, self.mu + other.mu)

    def __sub__(self, other: "ExtendedVector") -> "ExtendedVector":
        return ExtendedVector(self.v - other.v, self.alpha - other.alpha, self.mu - other.mu)

    def __mul__(self, scalar: float) -> "ExtendedVector":
        return ExtendedVector(scalar * self.v, scalar * self.alpha, scalar * self.mu)

    __rmul__ = __mul__


def evaluate(f: PeriodicPiecewisePolynomial, t: float) -> np.ndarray:
    """Value at any real t; t is reduced mod 1 before the interval is located."""
    return f.evaluate(t)


def derivative_at(f: PeriodicPiecewisePolynomial, t: float) -> np.ndarray:
    """Derivative at t; on a breakpoint the LEFT piece's derivative is returned."""
    return f.derivative_at(t)


def project_PL(z: PeriodicFunction, mesh: Mesh) -> DiscontinuousPiecewisePolynomial:
    """Interpolation projection P_L: the degree m-1 piecewise polynomial matching z at every t_{i,j}."""
    samples = np.atleast_2d(z(mesh.collocation_nodes.ravel()))
    return DiscontinuousPiecewisePolynomial(mesh, samples)


def integral_operator_L(w: DiscontinuousPiecewisePolynomial, alpha: np.ndarray, nu: np.ndarray) -> ExtendedVector:
    """Apply L to (w, alpha, nu).

    The first component t -> alpha + int_0^t w - t int_0^1 w is computed
    exactly from per-interval antiderivatives at the representation nodes,
    so the result is continuous, 1-periodic and of degree m on every piece.
    """
    mesh = w.mesh
    n_y = w.n_y
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    if alpha.size != n_y:
        raise ValueError(f"alpha has {alpha.size} entries, expected {n_y}")

    pieces = w.values.reshape(n_y, mesh.n_intervals, mesh.degree)
    partial = np.einsum("kj,ylj->ylk", mesh.antiderivative_matrix, pieces) * mesh.widths[None, :, None]

    prefix = np.concatenate([np.zeros((n_y, 1)), np.cumsum(partial[:, :, -1], axis=1)], axis=1)
    total = prefix[:, -1]
    cumulative = prefix[:, :-1, None] + partial

    u = alpha[:, None, None] + cumulative - mesh.representation_nodes[None, :, :] * total[:, None, None]
    v = PeriodicPiecewisePolynomial(mesh, u[:, :, :-1].reshape(n_y, mesh.n_nodes))
    return ExtendedVector(v, alpha + total, nu.copy())


def integral_operator_matrix(mesh: Mesh) -> Tuple[np.ndarray, np.ndarray]:
    """Matrices of L for one component: u = alpha + W @ w at the global nodes and int_0^1 w = total @ w.

    W has shape (m*L, m*L) (global nodes by collocation samples), total has shape (m*L,).
    """
    m, L = mesh.degree, mesh.n_intervals
    A = mesh.antiderivative_matrix
    total = (mesh.widths[:, None] * A[-1][None, :]).ravel()

    W = np.zeros((mesh.n_nodes, mesh.n_nodes))
    for i in range(L):
        rows = slice(i * m, (i + 1) * m)
        W[rows, i * m : (i + 1) * m] = mesh.widths[i] * A[:-1]
        W[rows, : i * m] = total[None, : i * m]
    W -= np.outer(mesh.global_nodes, total)
    return W, total


def uniform_grid(grid_points: int) -> np.ndarray:
    if grid_points < 2:
        raise ValueError(f"Grid needs at least 2 points, got {grid_points}")
    return np.linspace(0.0, 1.0, grid_points)


def norm_sup_grid(x: ExtendedVector, grid_points: int) -> float:
    """max(max_grid |v(t)|, |alpha|, |mu|), componentwise max-abs."""
    values = np.atleast_2d(x.v(uniform_grid(grid_points)))
    return float(max(np.max(np.abs(values)), np.max(np.abs(x.alpha), initial=0.0), np.max(np.abs(x.mu))))


def norm_lipschitz_estimate(x: ExtendedVector, grid_points: int) -> float:
    """Lower-bound estimate of max(||x||_sup, Lip(v)).

    Lip(v) is estimated by the largest finite-difference slope on the grid and,
    for continuous piecewise polynomials, by sampling each piece's derivative.
    """
    if grid_points < 3:
        raise ValueError(f"Lipschitz estimate needs at least 3 grid points, got {grid_points}")
    grid = uniform_grid(grid_points)
    values = np.atleast_2d(x.v(grid))
    slope = float(np.max(np.abs(np.diff(values, axis=1))) / (grid[1] - grid[0]))

    if isinstance(x.v, PeriodicPiecewisePolynomial):
        sigmas = np.linspace(0.0, 1.0, 2 * x.v.mesh.degree + 3)
        slope = max(slope, float(np.max(np.abs(x.v.interval_derivatives(sigmas)))))

    return max(norm_sup_grid(x, grid_points), slope)
