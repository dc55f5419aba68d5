"""
Periodic FDE collocation

Periodic solutions of functional differential equations with discrete,
possibly state-dependent delays, computed by piecewise polynomial
collocation with Newton's method:
- Problem definitions with analytic or finite-difference derivatives
- Square collocation systems with phase and amplitude constraints
- The equivalent fixed-point operator with consistency and stability probes
- Convergence sweeps writing CSV tables and plot scripts

Usage:
    from periodic_fde import RunConfig, convergence_sweep

    config = RunConfig.load("config/run.yaml")
    result = convergence_sweep(config)
"""

__version__ = "0.1.0"

from periodic_fde.config.settings import RunConfig
from periodic_fde.core.collocation import CollocationSystem
from periodic_fde.core.mesh import Mesh, uniform_mesh
from periodic_fde.core.newton import NewtonConfig, solve
from periodic_fde.core.registry import get_problem, register_problem
from periodic_fde.harness.sweep import convergence_sweep

__all__ = [
    "CollocationSystem",
    "Mesh",
    "NewtonConfig",
    "RunConfig",
    "convergence_sweep",
    "get_problem",
    "register_problem",
    "solve",
    "uniform_mesh",
]
