"""Meshes, collocation node families, barycentric interpolation and quadrature on [0, 1].

This module handles:
- Reference collocation nodes (Gauss-Legendre, Chebyshev of the second kind)
- Barycentric Lagrange weights, interpolation and differentiation matrices
- Gauss quadrature rules mapped to [0, 1] and to mesh intervals
- Uniform and nonuniform meshes of the rescaled period interval

Meshes are immutable after construction and can be shared between solves.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Sequence, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

logger = logging.getLogger(__name__)

# Distance below which a reduced time is treated as sitting on a breakpoint
SNAP_TOLERANCE = 1e-14


class NodeFamily(Enum):
    """Reference collocation node families."""

    GAUSS_LEGENDRE = "gauss_legendre"
    CHEBYSHEV2 = "chebyshev2"

    @classmethod
    def parse(cls, value: Union[str, "NodeFamily"]) -> "NodeFamily":
        """Accept an enum member or its (case-insensitive) name."""
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        for member in cls:
            if key in (member.value, member.name.lower()):
                return member
        raise ValueError(f"Unsupported node family: {value!r}")


def gauss_legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1], nodes ascending."""
    if n < 1:
        raise ValueError(f"Number of Gauss points must be positive, got {n}")
    x, w = leggauss(n)
    return 0.5 * (1.0 + x), 0.5 * w


def reference_nodes(m: int, family: Union[str, NodeFamily] = NodeFamily.GAUSS_LEGENDRE) -> np.ndarray:
    """The m reference collocation nodes in [0, 1], sorted ascending."""
    if m < 1:
        raise ValueError(f"Degree must be at least 1, got {m}")

    family = NodeFamily.parse(family)
    if family is NodeFamily.GAUSS_LEGENDRE:
        return gauss_legendre(m)[0]
    if family is NodeFamily.CHEBYSHEV2:
        # zeros of the Chebyshev polynomial of the second kind U_m
        k = np.arange(1, m + 1)
        return 0.5 * (1.0 - np.cos(k * np.pi / (m + 1)))
    raise ValueError(f"Unsupported node family: {family!r}")


def barycentric_weights(nodes: Sequence[float]) -> np.ndarray:
    """Barycentric weights w_j = 1 / prod_{k != j} (x_j - x_k)."""
    nodes = np.asarray(nodes, dtype=float)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    if np.any(diff == 0.0):
        raise ValueError(f"Interpolation nodes must be pairwise distinct: {nodes}")
    return 1.0 / np.prod(diff, axis=1)


def barycentric_matrix(nodes: np.ndarray, weights: np.ndarray, x: Union[float, np.ndarray]) -> np.ndarray:
    """Lagrange basis values l_j(x) from the second barycentric formula, shape (len(x), len(nodes))."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    diff = x[:, None] - nodes[None, :]
    hits = np.abs(diff) < SNAP_TOLERANCE
    diff[hits] = 1.0

    terms = weights[None, :] / diff
    with np.errstate(divide="ignore", invalid="ignore"):
        rows = terms / np.sum(terms, axis=1, keepdims=True)

    hit_rows = np.any(hits, axis=1)
    rows[hit_rows] = hits[hit_rows].astype(float)
    return rows


def differentiation_matrix(nodes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Matrix D with (D c)_i = p'(x_i) for the interpolant p of nodal values c."""
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    D = (weights[None, :] / weights[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -np.sum(D, axis=1))
    return D


def interpolate(nodes: Sequence[float], values: Sequence[float], x: Union[float, np.ndarray]) -> np.ndarray:
    """Evaluate the polynomial interpolating (nodes, values) at x."""
    nodes = np.asarray(nodes, dtype=float)
    weights = barycentric_weights(nodes)
    return barycentric_matrix(nodes, weights, x) @ np.asarray(values, dtype=float)


def quadrature_rule(m: int, family: Union[str, NodeFamily] = NodeFamily.GAUSS_LEGENDRE) -> Tuple[np.ndarray, np.ndarray]:
    """Quadrature on [0, 1] built on the reference collocation nodes.

    Gauss-Legendre nodes give the Gauss rule (exact to degree 2m-1); other
    families get interpolatory weights (exact to degree m-1).
    """
    family = NodeFamily.parse(family)
    if family is NodeFamily.GAUSS_LEGENDRE:
        return gauss_legendre(m)

    nodes = reference_nodes(m, family)
    gauss_nodes, gauss_weights = gauss_legendre(m)
    basis = barycentric_matrix(nodes, barycentric_weights(nodes), gauss_nodes)
    return nodes, gauss_weights @ basis


@dataclass(frozen=True, eq=False)
class Mesh:
    """Partition 0 = t_0 < ... < t_L = 1 with per-interval collocation and representation nodes.

    The unknown piecewise polynomial is stored at m+1 uniform representation
    nodes per interval; the right endpoint of interval i is the left endpoint
    of interval i+1 and t_L is identified with t_0, giving m*L global nodes.
    """

    breakpoints: np.ndarray
    degree: int
    family: NodeFamily = NodeFamily.GAUSS_LEGENDRE
    c_msh: float = 1.0

    def __post_init__(self) -> None:
        breakpoints = np.array(self.breakpoints, dtype=float)
        if breakpoints.ndim != 1 or breakpoints.size < 2:
            raise ValueError("Mesh needs at least two breakpoints")
        if breakpoints[0] != 0.0 or breakpoints[-1] != 1.0:
            raise ValueError(f"Mesh must start at 0 and end at 1, got [{breakpoints[0]}, {breakpoints[-1]}]")
        if np.any(np.diff(breakpoints) <= 0.0):
            raise ValueError("Mesh breakpoints must be strictly increasing")
        if self.degree < 1:
            raise ValueError(f"Degree must be at least 1, got {self.degree}")

        breakpoints.setflags(write=False)
        object.__setattr__(self, "breakpoints", breakpoints)
        object.__setattr__(self, "family", NodeFamily.parse(self.family))

    def __repr__(self) -> str:
        return f"Mesh(L={self.n_intervals}, m={self.degree}, family={self.family.value}, c_msh={self.c_msh:.3g})"

    @property
    def n_intervals(self) -> int:
        return self.breakpoints.size - 1

    @property
    def n_nodes(self) -> int:
        """Number of global representation nodes (m*L)."""
        return self.degree * self.n_intervals

    @cached_property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @cached_property
    def reference_collocation(self) -> np.ndarray:
        return reference_nodes(self.degree, self.family)

    @cached_property
    def collocation_weights(self) -> np.ndarray:
        return barycentric_weights(self.reference_collocation)

    @cached_property
    def reference_representation(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.degree + 1)

    @cached_property
    def representation_weights(self) -> np.ndarray:
        return barycentric_weights(self.reference_representation)

    @cached_property
    def representation_derivative(self) -> np.ndarray:
        return differentiation_matrix(self.reference_representation, self.representation_weights)

    @cached_property
    def collocation_nodes(self) -> np.ndarray:
        """Collocation points t_{i,j}, shape (L, m)."""
        return self.breakpoints[:-1, None] + self.widths[:, None] * self.reference_collocation[None, :]

    @cached_property
    def representation_nodes(self) -> np.ndarray:
        """Representation points including both interval endpoints, shape (L, m+1)."""
        return self.breakpoints[:-1, None] + self.widths[:, None] * self.reference_representation[None, :]

    @cached_property
    def node_index(self) -> np.ndarray:
        """Global node index of each (interval, local node) pair, shape (L, m+1)."""
        m = self.degree
        local = np.arange(self.n_intervals)[:, None] * m + np.arange(m + 1)[None, :]
        return local % self.n_nodes

    @cached_property
    def global_nodes(self) -> np.ndarray:
        """Positions of the m*L global nodes in [0, 1)."""
        return self.representation_nodes[:, :-1].ravel()

    @cached_property
    def antiderivative_matrix(self) -> np.ndarray:
        """A[k, j] = integral over [0, k/m] of the j-th collocation Lagrange basis polynomial."""
        m = self.degree
        gauss_nodes, gauss_weights = gauss_legendre(m)
        A = np.zeros((m + 1, m))
        for k, sigma in enumerate(self.reference_representation):
            if sigma == 0.0:
                continue
            basis = barycentric_matrix(self.reference_collocation, self.collocation_weights, sigma * gauss_nodes)
            A[k] = (sigma * gauss_weights) @ basis
        return A

    def locate(self, t: Union[float, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
        """Interval index and local coordinate in [0, 1] of each time, after reduction mod 1.

        A time on a breakpoint belongs to the interval on its LEFT; t = 0 is
        identified with t_L = 1 and so belongs to the last interval.
        """
        bp = self.breakpoints
        L = self.n_intervals
        t = np.atleast_1d(np.asarray(t, dtype=float))
        s = t - np.floor(t)

        j = np.clip(np.searchsorted(bp, s), 1, L)
        left = bp[j - 1]
        right = bp[j]
        s = np.where(np.abs(s - left) <= SNAP_TOLERANCE, left, s)
        s = np.where(np.abs(right - s) <= SNAP_TOLERANCE, right, s)
        s = np.where(s == 0.0, 1.0, s)

        idx = np.clip(np.searchsorted(bp, s, side="left") - 1, 0, L - 1)
        sigma = (s - bp[idx]) / self.widths[idx]
        return idx, sigma

    def value_basis(self, t: Union[float, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
        """Global node indices and basis weights for point values at t, each shape (N, m+1)."""
        idx, sigma = self.locate(t)
        rows = barycentric_matrix(self.reference_representation, self.representation_weights, sigma)
        return self.node_index[idx], rows

    def derivative_basis(self, t: Union[float, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
        """Global node indices and basis weights for (left) derivatives at t, each shape (N, m+1)."""
        idx, sigma = self.locate(t)
        rows = barycentric_matrix(self.reference_representation, self.representation_weights, sigma)
        rows = (rows @ self.representation_derivative) / self.widths[idx][:, None]
        return self.node_index[idx], rows

    def quadrature(self, n_points: int) -> Tuple[np.ndarray, np.ndarray]:
        """Composite Gauss-Legendre rule with n_points per interval, flattened in interval order."""
        gauss_nodes, gauss_weights = gauss_legendre(n_points)
        nodes = self.breakpoints[:-1, None] + self.widths[:, None] * gauss_nodes[None, :]
        weights = self.widths[:, None] * gauss_weights[None, :]
        return nodes.ravel(), weights.ravel()

    def refines(self, other: "Mesh") -> bool:
        """True if every breakpoint of other is also a breakpoint of this mesh."""
        distance = np.min(np.abs(self.breakpoints[None, :] - other.breakpoints[:, None]), axis=1)
        return bool(np.all(distance <= SNAP_TOLERANCE))


def uniform_mesh(L: int, m: int, family: Union[str, NodeFamily] = NodeFamily.GAUSS_LEGENDRE) -> Mesh:
    """Uniform mesh with breakpoints i/L and degree m."""
    if L < 1:
        raise ValueError(f"Number of intervals must be at least 1, got {L}")
    if m < 1:
        raise ValueError(f"Degree must be at least 1, got {m}")
    return Mesh(np.arange(L + 1) / L, m, NodeFamily.parse(family), c_msh=1.0)


def mesh_from_breakpoints(
    breakpoints: Sequence[float], m: int, family: Union[str, NodeFamily] = NodeFamily.GAUSS_LEGENDRE
) -> Mesh:
    """Nonuniform mesh; C_msh = L * max interval width is computed and stored."""
    breakpoints = np.asarray(breakpoints, dtype=float)
    L = breakpoints.size - 1
    c_msh = float(L * np.max(np.diff(breakpoints))) if L >= 1 else 1.0
    mesh = Mesh(breakpoints, m, NodeFamily.parse(family), c_msh=c_msh)
    logger.debug(f"Built nonuniform {mesh!r}")
    return mesh
