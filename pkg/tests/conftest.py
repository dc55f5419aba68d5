"""Shared fixtures for the collocation test suite."""

import logging

import numpy as np
import pytest

from periodic_fde.config.settings import RunConfig
from periodic_fde.core.collocation import CollocationSystem
from periodic_fde.core.mesh import uniform_mesh
from periodic_fde.core.newton import NewtonConfig
from periodic_fde.core.problem import builtin_cd_proto, builtin_sd_proto
from periodic_fde.harness.seeding import continue_in_y0

BENCHMARK_Y0 = 0.75


class SineHistory:
    """amplitude * sin(2 pi t) with its derivative, usable wherever a history is sampled."""

    def __init__(self, amplitude: float = 1.0, phase: float = 0.0):
        self.amplitude = amplitude
        self.phase = phase

    def __call__(self, t):
        return self.amplitude * np.sin(2.0 * np.pi * np.asarray(t) + self.phase)[None, :]

    def derivative(self, t):
        return 2.0 * np.pi * self.amplitude * np.cos(2.0 * np.pi * np.asarray(t) + self.phase)[None, :]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def sd_proto():
    return builtin_sd_proto()


@pytest.fixture(scope="session")
def cd_proto():
    return builtin_cd_proto()


@pytest.fixture(scope="session")
def benchmark_solution(sd_proto):
    """Converged sd_proto solution at y0 = 0.75 on L = 10, m = 5, reached by continuation from y0 = 0.1."""
    prob, family = sd_proto
    mesh = uniform_mesh(10, 5)
    x = continue_in_y0(prob, family, 0.1, BENCHMARK_Y0, 14, mesh, NewtonConfig())
    system = CollocationSystem(prob, family(BENCHMARK_Y0), mesh)
    return system, x


@pytest.fixture
def run_config(tmp_path, monkeypatch):
    """Small configuration writing into a temporary directory."""
    for name in ("PFDE_CONFIG", "PFDE_OUTPUT_DIR", "PFDE_GRID_POINTS", "LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    return RunConfig(L_list=[10, 20], m_list=[3], grid_points=2001, output_dir=str(tmp_path / "results"))


@pytest.fixture(autouse=True)
def restore_root_logger():
    """setup_logging replaces root handlers; put them back after each test."""
    root = logging.getLogger()
    handlers = root.handlers[:]
    level = root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)
