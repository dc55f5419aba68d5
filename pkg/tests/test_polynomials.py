"""
Tests for periodic piecewise polynomials, P_L, the integral operator and the norms.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from periodic_fde.core.mesh import uniform_mesh
from periodic_fde.core.polynomials import (
    DiscontinuousPiecewisePolynomial,
    ExtendedVector,
    PeriodicPiecewisePolynomial,
    derivative_at,
    evaluate,
    integral_operator_L,
    integral_operator_matrix,
    norm_lipschitz_estimate,
    norm_sup_grid,
    project_PL,
)
from periodic_fde.harness.sweep import fit_slope


def sine(t):
    return np.sin(2 * np.pi * np.asarray(t))


def sup_error(approx, exact, n=2001):
    t = np.linspace(0.0, 1.0, n)
    return float(np.max(np.abs(approx(t) - exact(t))))


class TestPeriodicPiecewisePolynomial:
    def test_constant_function(self):
        f = PeriodicPiecewisePolynomial(uniform_mesh(4, 3), np.full((1, 12), -1.5))
        assert_allclose(f(np.linspace(-1, 2, 31)), -1.5, atol=1e-15)
        assert_allclose(evaluate(f, 0.37), [-1.5], atol=1e-15)
        assert_allclose(derivative_at(f, 0.37), [0.0], atol=1e-12)

    def test_periodicity_is_exact(self, rng):
        mesh = uniform_mesh(5, 4)
        f = PeriodicPiecewisePolynomial(mesh, rng.standard_normal((2, mesh.n_nodes)))
        t = np.arange(64) / 64
        assert_array_equal(f(t + 1.0), f(t))
        assert_array_equal(evaluate(f, 1.25), evaluate(f, 0.25))

    def test_interpolant_of_sine(self):
        f = PeriodicPiecewisePolynomial.interpolate(sine, uniform_mesh(20, 5))
        assert abs(evaluate(f, 0.3)[0] - np.sin(0.6 * np.pi)) < 1e-8

    def test_derivative_of_sine_interpolant(self):
        f = PeriodicPiecewisePolynomial.interpolate(sine, uniform_mesh(10, 4))
        assert abs(derivative_at(f, 0.25)[0]) < 1e-3
        assert derivative_at(f, 0.0)[0] == pytest.approx(2 * np.pi, rel=1e-3)

    def test_derivative_uses_left_piece_at_breakpoints(self):
        # hat: slope 2 on [0, 1/2], slope -2 on [1/2, 1]
        f = PeriodicPiecewisePolynomial(uniform_mesh(2, 1), np.array([[0.0, 1.0]]))
        assert derivative_at(f, 0.5)[0] == pytest.approx(2.0)
        assert derivative_at(f, 0.0)[0] == pytest.approx(-2.0)
        assert derivative_at(f, 1.0)[0] == pytest.approx(-2.0)
        assert derivative_at(f, 0.75)[0] == pytest.approx(-2.0)

    def test_continuous_across_breakpoints(self, rng):
        mesh = uniform_mesh(6, 3)
        f = PeriodicPiecewisePolynomial(mesh, rng.standard_normal((1, mesh.n_nodes)))
        eps = 1e-12
        bp = mesh.breakpoints[1:-1]
        assert_allclose(f(bp - eps), f(bp + eps), atol=1e-9)

    def test_wrong_shape_rejected(self):
        with pytest.raises(ValueError, match="nodal values"):
            PeriodicPiecewisePolynomial(uniform_mesh(3, 2), np.zeros((1, 5)))

    def test_arithmetic_requires_same_mesh(self):
        a = PeriodicPiecewisePolynomial.zeros(uniform_mesh(3, 2))
        b = PeriodicPiecewisePolynomial.zeros(uniform_mesh(4, 2))
        with pytest.raises(ValueError, match="different meshes"):
            a + b

    def test_values_are_immutable(self):
        f = PeriodicPiecewisePolynomial.zeros(uniform_mesh(3, 2))
        with pytest.raises(ValueError):
            f.values[0, 0] = 1.0

    def test_resample_preserves_function(self):
        f = PeriodicPiecewisePolynomial.interpolate(sine, uniform_mesh(20, 5))
        g = f.resample(uniform_mesh(30, 4))
        assert sup_error(g, sine) < 1e-6


class TestDiscontinuousPiecewisePolynomial:
    def test_left_convention_and_wrap(self):
        w = DiscontinuousPiecewisePolynomial(uniform_mesh(2, 1), np.array([[1.0, 3.0]]))
        assert_allclose(w(np.array([0.5, 0.75, 0.0, 1.5, 0.25])), [[1.0, 3.0, 3.0, 1.0, 1.0]])


class TestProjection:
    def test_exact_on_polynomials_of_degree_m_minus_1(self):
        mesh = uniform_mesh(5, 3)
        quadratic = lambda t: 1 + 2 * t - 3 * t**2  # noqa: E731
        w = project_PL(quadratic, mesh)
        t = np.linspace(0.01, 0.99, 57)
        assert_allclose(w(t)[0], quadratic(t), atol=1e-12)

    def test_order_on_smooth_function(self):
        Ls = [10, 20, 40]
        errors = [sup_error(project_PL(sine, uniform_mesh(L, 4)), sine) for L in Ls]
        assert 3.5 <= fit_slope(Ls, errors) <= 4.5

    def test_order_on_kink(self):
        kink = lambda t: np.abs(np.asarray(t) - 0.5)  # noqa: E731
        Ls = [11, 21, 41]
        errors = [sup_error(project_PL(kink, uniform_mesh(L, 3)), kink, n=20001) for L in Ls]
        assert 0.7 <= fit_slope(Ls, errors) <= 1.3


class TestIntegralOperator:
    def test_zero_density(self):
        mesh = uniform_mesh(4, 3)
        w = DiscontinuousPiecewisePolynomial(mesh, np.zeros((1, mesh.n_nodes)))
        x = integral_operator_L(w, [0.7], [2.0, 0.5])
        assert_allclose(x.v.values, 0.7)
        assert_allclose(x.alpha, [0.7])
        assert_allclose(x.mu, [2.0, 0.5])

    def test_constant_density(self):
        mesh = uniform_mesh(4, 3)
        w = DiscontinuousPiecewisePolynomial(mesh, np.ones((1, mesh.n_nodes)))
        x = integral_operator_L(w, [0.0], [1.0])
        assert_allclose(x.v.values, 0.0, atol=1e-14)
        assert_allclose(x.alpha, [1.0])

    def test_antiderivative_of_cosine(self):
        mesh = uniform_mesh(20, 5)
        w = project_PL(lambda t: np.cos(2 * np.pi * t), mesh)
        x = integral_operator_L(w, [0.0], [1.0])
        assert sup_error(x.v, lambda t: np.sin(2 * np.pi * t) / (2 * np.pi)) < 1e-6
        assert abs(x.alpha[0]) < 1e-9

    def test_linearity(self, rng):
        mesh = uniform_mesh(6, 4)

        def random_args():
            w = DiscontinuousPiecewisePolynomial(mesh, rng.standard_normal((2, mesh.n_nodes)))
            return w, rng.standard_normal(2), rng.standard_normal(3)

        (w1, a1, n1), (w2, a2, n2) = random_args(), random_args()
        a, b = 0.3, -1.7
        combined = integral_operator_L(a * w1 + b * w2, a * a1 + b * a2, a * n1 + b * n2)
        separate = a * integral_operator_L(w1, a1, n1) + b * integral_operator_L(w2, a2, n2)
        assert_allclose(combined.v.values, separate.v.values, atol=1e-13)
        assert_allclose(combined.alpha, separate.alpha, atol=1e-13)
        assert_allclose(combined.mu, separate.mu, atol=1e-13)

    def test_matrix_form_matches_operator(self, rng):
        mesh = uniform_mesh(5, 3)
        samples = rng.standard_normal(mesh.n_nodes)
        x = integral_operator_L(DiscontinuousPiecewisePolynomial(mesh, samples[None, :]), [0.4], [1.0])
        W, total = integral_operator_matrix(mesh)
        assert_allclose(0.4 + W @ samples, x.v.values[0], atol=1e-13)
        assert total @ samples == pytest.approx(x.alpha[0] - 0.4, abs=1e-13)

    def test_alpha_size_checked(self):
        mesh = uniform_mesh(2, 2)
        w = DiscontinuousPiecewisePolynomial(mesh, np.zeros((1, mesh.n_nodes)))
        with pytest.raises(ValueError, match="alpha"):
            integral_operator_L(w, [0.0, 1.0], [1.0])


class TestNorms:
    def test_zero_vector(self):
        x = ExtendedVector(PeriodicPiecewisePolynomial.zeros(uniform_mesh(3, 2)), [0.0], [0.0])
        assert norm_sup_grid(x, 101) == 0.0

    def test_sup_takes_max_over_components(self):
        x = ExtendedVector(PeriodicPiecewisePolynomial.zeros(uniform_mesh(3, 2)), [2.0], [1.0, 3.0])
        assert norm_sup_grid(x, 101) == 3.0

    def test_sup_of_sine(self):
        v = PeriodicPiecewisePolynomial.interpolate(sine, uniform_mesh(20, 5))
        x = ExtendedVector(v, [0.0], [0.0])
        assert norm_sup_grid(x, 10001) == pytest.approx(1.0, abs=1e-6)

    def test_lipschitz_of_constant(self):
        v = PeriodicPiecewisePolynomial(uniform_mesh(3, 2), np.full((1, 6), -2.5))
        x = ExtendedVector(v, [0.0], [0.0])
        assert norm_lipschitz_estimate(x, 1001) == pytest.approx(2.5)

    def test_lipschitz_of_sine(self):
        v = PeriodicPiecewisePolynomial.interpolate(sine, uniform_mesh(20, 5))
        x = ExtendedVector(v, [0.0], [0.0])
        assert norm_lipschitz_estimate(x, 10001) == pytest.approx(2 * np.pi, rel=1e-3)

    def test_lipschitz_of_hat(self):
        v = PeriodicPiecewisePolynomial(uniform_mesh(4, 1), np.array([[0.0, 1.0, 0.0, -1.0]]))
        x = ExtendedVector(v, [0.0], [0.0])
        assert norm_lipschitz_estimate(x, 10001) == pytest.approx(4.0, rel=1e-9)

    def test_mu_needs_period(self):
        with pytest.raises(ValueError, match="period"):
            ExtendedVector(PeriodicPiecewisePolynomial.zeros(uniform_mesh(2, 1)), [0.0], [])
