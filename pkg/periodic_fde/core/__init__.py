"""Core numerics: meshes, piecewise polynomials, problems, collocation, Newton and the fixed-point operator."""

from periodic_fde.core.collocation import CollocationSystem, UnknownLayout
from periodic_fde.core.mesh import Mesh, NodeFamily, uniform_mesh
from periodic_fde.core.newton import NewtonConfig, NewtonReport, solve
from periodic_fde.core.polynomials import DiscontinuousPiecewisePolynomial, ExtendedVector, PeriodicPiecewisePolynomial
from periodic_fde.core.problem import AffineConstraints, ProblemDefinition

__all__ = [
    "AffineConstraints",
    "CollocationSystem",
    "DiscontinuousPiecewisePolynomial",
    "ExtendedVector",
    "Mesh",
    "NewtonConfig",
    "NewtonReport",
    "NodeFamily",
    "PeriodicPiecewisePolynomial",
    "ProblemDefinition",
    "UnknownLayout",
    "solve",
    "uniform_mesh",
]
