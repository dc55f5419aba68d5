"""
Tests for the damped Newton solver.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from periodic_fde.core.errors import NonpositivePeriodError, SingularJacobianError
from periodic_fde.core.newton import Damping, NewtonConfig, solve


class Quadratic:
    """F(x) = x**2 - target, componentwise."""

    def __init__(self, target):
        self.target = np.asarray(target, dtype=float)
        self.jacobian_calls = 0

    def residual(self, x):
        return x**2 - self.target

    def jacobian(self, x):
        self.jacobian_calls += 1
        return np.diag(2 * x)


class Degenerate:
    def residual(self, x):
        return np.array([x[0] + x[1] - 1.0, 2 * (x[0] + x[1]) - 3.0])

    def jacobian(self, x):
        return np.array([[1.0, 1.0], [2.0, 2.0]])


class PeriodLayout:
    period_index = 0


class PeriodSystem(Quadratic):
    layout = PeriodLayout()


class TestNewtonSolve:
    def test_converges_quadratically(self):
        report = solve(Quadratic([2.0, 3.0]), np.array([1.0, 1.0]))
        assert report.converged
        assert_allclose(report.final_x, np.sqrt([2.0, 3.0]), atol=1e-12)
        history = report.residual_history
        assert len(history) == report.iterations == len(report.step_history) == len(report.damping_factors)
        assert history[2] <= 10 * history[1] ** 2

    def test_exact_start_needs_no_iteration(self):
        system = Quadratic([4.0])
        report = solve(system, np.array([2.0]))
        assert report.converged
        assert report.iterations == 0
        assert system.jacobian_calls == 0
        assert report.final_residual == 0.0

    def test_singular_jacobian(self):
        with pytest.raises(SingularJacobianError, match="Jacobian singular at iteration 1"):
            solve(Degenerate(), np.zeros(2))

    def test_iteration_limit_is_not_an_exception(self):
        cfg = NewtonConfig(max_iters=5, damping=Damping.NONE)
        report = solve(Quadratic([-1.0]), np.array([0.5]), cfg)
        assert not report.converged
        assert report.iterations == 5
        assert "no convergence" in report.message

    def test_stream_receives_iteration_lines(self):
        lines = []
        solve(Quadratic([2.0]), np.array([1.0]), stream=lines.append)
        assert lines
        assert lines[0].startswith("iter 1 residual ")
        assert " step " in lines[0]

    def test_rejects_nonpositive_period_start(self):
        with pytest.raises(NonpositivePeriodError):
            solve(PeriodSystem([1.0, 1.0]), np.array([-1.0, 2.0]))

    def test_armijo_recovers_from_overshoot(self):
        report = solve(PeriodSystem([4.0]), np.array([0.1]))
        assert report.converged
        assert report.damping_factors[0] == 0.125
        assert report.final_x[0] == pytest.approx(2.0)

    def test_trial_points_with_nonpositive_period_are_rejected(self):
        # Jacobian understated by 4: the full step lands at T = -2, the half step at T = 0
        class Underestimated:
            layout = PeriodLayout()

            def residual(self, x):
                return x - 1.0

            def jacobian(self, x):
                return np.array([[0.25]])

        report = solve(Underestimated(), np.array([2.0]))
        assert report.converged
        assert report.damping_factors == [0.25]
        assert report.final_x[0] == 1.0

    def test_step_tolerance_stops_without_convergence(self):
        cfg = NewtonConfig(tol_residual=1e-30, tol_step=1e-3)
        report = solve(Quadratic([2.0]), np.array([1.0]), cfg)
        assert not report.converged
        assert "step below tolerance" in report.message


class TestNewtonConfig:
    def test_defaults(self):
        cfg = NewtonConfig()
        assert (cfg.tol_residual, cfg.tol_step, cfg.max_iters) == (1e-10, 1e-12, 50)
        assert cfg.damping is Damping.ARMIJO

    def test_from_dict_coerces_yaml_strings(self):
        cfg = NewtonConfig.from_dict({"tol_residual": "1e-9", "max_iters": "7", "damping": "NONE"})
        assert cfg.tol_residual == 1e-9
        assert cfg.max_iters == 7
        assert cfg.damping is Damping.NONE
        assert NewtonConfig.from_dict(cfg.to_dict()) == cfg

    @pytest.mark.parametrize(
        "settings",
        [{"tol_residual": 0}, {"max_iters": 0}, {"backtracking_factor": 1.0}, {"max_halvings": -1}],
    )
    def test_invalid_settings(self, settings):
        with pytest.raises(ValueError):
            NewtonConfig(**settings)

    def test_unknown_keys(self):
        with pytest.raises(ValueError, match="Unknown newton settings"):
            NewtonConfig.from_dict({"tolerance": 1e-8})


class TestCollocationSolve:
    def test_benchmark_period(self, benchmark_solution):
        system, x = benchmark_solution
        T = x[system.layout.period_index]
        assert 6.9 <= T <= 7.1
        assert np.max(np.abs(system.residual(x))) <= 1e-10

    def test_converged_start(self, benchmark_solution):
        system, x = benchmark_solution
        report = solve(system, x)
        assert report.converged
        assert report.iterations <= 1

    def test_local_uniqueness(self, benchmark_solution, rng):
        system, x = benchmark_solution
        perturbed = x * (1 + 1e-3 * rng.standard_normal(x.size))
        report = solve(system, perturbed)
        assert report.converged
        assert np.max(np.abs(report.final_x - x)) <= 1e-9

    def test_hopf_seed_converges_quickly(self, sd_proto):
        from periodic_fde.core.collocation import CollocationSystem
        from periodic_fde.core.mesh import uniform_mesh
        from periodic_fde.harness.seeding import hopf_seed

        prob, family = sd_proto
        mesh = uniform_mesh(20, 4)
        report = solve(CollocationSystem(prob, family(0.1), mesh), hopf_seed(0.1, mesh))
        assert report.converged
        assert report.iterations <= 10
        tail = report.residual_history[-3:]
        assert tail == sorted(tail, reverse=True)
