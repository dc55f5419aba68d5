"""FDE problems with discrete, possibly state-dependent delays.

This module handles:
- Problem definitions y'(t) = f(y(t - tau_0), ..., y(t - tau_nd), p) with sequentially defined delays
- The rescaled right-hand side G(v, mu) = T * f(...) evaluated on a 1-periodic history
- Chain-rule linearization of G, shared by the Jacobian action, the collocation Jacobian and D Phi_L
- Affine constraints R_aff built from point, integral, parameter and offset terms
- The built-in prototype problems

User functions are vectorized over evaluation points:

    f(U, p)           U: (n_y, n_d+1, N), p: (n_p,)  ->  (n_y, N)
    df_du(U, p)       -> (n_y, n_y, n_d+1, N)   [a, b, k, n] = d f_a / d U_{b,k}
    df_dp(U, p)       -> (n_y, n_p, N)
    tau[j-1](U, p)    U: (n_y, j, N)            ->  (N,)
    dtau_du[j-1](U, p)  -> (n_y, j, N)
    dtau_dp[j-1](U, p)  -> (n_p, N)

Missing derivative callables fall back to central differences. Problem
functions must be pure.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from periodic_fde.core.errors import DelayEvaluationError, NonpositivePeriodError
from periodic_fde.core.mesh import Mesh

logger = logging.getLogger(__name__)

FD_RELATIVE_STEP = 1e-6

ArrayFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _difference_state(fun: ArrayFunction, U: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Central differences of fun with respect to every U[b, k], appended after fun's leading axes."""
    base = np.asarray(fun(U, p), dtype=float)
    result = np.zeros(base.shape[:-1] + U.shape)
    for index in np.ndindex(*U.shape[:-1]):
        h = FD_RELATIVE_STEP * np.maximum(1.0, np.abs(U[index]))
        up = U.copy()
        down = U.copy()
        up[index] += h
        down[index] -= h
        step = up[index] - down[index]
        result[(Ellipsis,) + index + (slice(None),)] = (np.asarray(fun(up, p)) - np.asarray(fun(down, p))) / step
    return result


def _difference_parameters(fun: ArrayFunction, U: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Central differences of fun with respect to every p[q], shape fun-leading + (n_p, N)."""
    base = np.asarray(fun(U, p), dtype=float)
    n_points = U.shape[-1]
    result = np.zeros(base.shape[:-1] + (p.size, n_points))
    for q in range(p.size):
        h = FD_RELATIVE_STEP * max(1.0, abs(p[q]))
        up = p.copy()
        down = p.copy()
        up[q] += h
        down[q] -= h
        step = up[q] - down[q]
        result[..., q, :] = (np.asarray(fun(U, up)) - np.asarray(fun(U, down))) / step
    return result


@dataclass(frozen=True, eq=False)
class ProblemDefinition:
    """An FDE in discrete-delay form with parameters p and declared smoothness order.

    tau_0 = 0 is structural: tau holds tau_fun_1 .. tau_fun_nd, and tau[j-1]
    only sees the delayed-state blocks 0 .. j-1.
    """

    name: str
    n_y: int
    n_p: int
    f: ArrayFunction
    tau: Tuple[ArrayFunction, ...] = ()
    df_du: Optional[ArrayFunction] = None
    df_dp: Optional[ArrayFunction] = None
    dtau_du: Tuple[Optional[ArrayFunction], ...] = ()
    dtau_dp: Tuple[Optional[ArrayFunction], ...] = ()
    smoothness_order: float = 1.0
    description: str = ""

    def __post_init__(self) -> None:
        if self.n_y < 1:
            raise ValueError(f"Problem '{self.name}': n_y must be positive")
        if self.n_p < 0:
            raise ValueError(f"Problem '{self.name}': n_p must be non-negative")
        if self.smoothness_order < 1:
            raise ValueError(f"Problem '{self.name}': smoothness order must be at least 1")
        object.__setattr__(self, "tau", tuple(self.tau))
        object.__setattr__(self, "dtau_du", tuple(self.dtau_du) + (None,) * (len(self.tau) - len(self.dtau_du)))
        object.__setattr__(self, "dtau_dp", tuple(self.dtau_dp) + (None,) * (len(self.tau) - len(self.dtau_dp)))

    @property
    def n_d(self) -> int:
        return len(self.tau)

    @property
    def n_mu(self) -> int:
        return self.n_p + 1

    def expected_order(self, m: int) -> int:
        """Convergence order min(l_max, m) the theory predicts for degree m."""
        return int(min(self.smoothness_order, m))

    def rhs(self, U: np.ndarray, p: np.ndarray) -> np.ndarray:
        return np.asarray(self.f(U, p), dtype=float).reshape(self.n_y, U.shape[-1])

    def delay(self, j: int, U: np.ndarray, p: np.ndarray) -> np.ndarray:
        value = np.asarray(self.tau[j - 1](U, p), dtype=float)
        return np.broadcast_to(value, (U.shape[-1],))

    def state_partials(self, U: np.ndarray, p: np.ndarray) -> np.ndarray:
        if self.df_du is not None:
            return np.asarray(self.df_du(U, p), dtype=float)
        return _difference_state(self.rhs, U, p)

    def parameter_partials(self, U: np.ndarray, p: np.ndarray) -> np.ndarray:
        if self.df_dp is not None:
            return np.asarray(self.df_dp(U, p), dtype=float).reshape(self.n_y, self.n_p, U.shape[-1])
        return _difference_parameters(self.rhs, U, p)

    def delay_state_partials(self, j: int, U: np.ndarray, p: np.ndarray) -> np.ndarray:
        derivative = self.dtau_du[j - 1]
        if derivative is not None:
            return np.broadcast_to(np.asarray(derivative(U, p), dtype=float), U.shape)
        return _difference_state(lambda X, q: self.delay(j, X, q), U, p)

    def delay_parameter_partials(self, j: int, U: np.ndarray, p: np.ndarray) -> np.ndarray:
        derivative = self.dtau_dp[j - 1]
        if derivative is not None:
            return np.broadcast_to(np.asarray(derivative(U, p), dtype=float), (self.n_p, U.shape[-1]))
        return _difference_parameters(lambda X, q: self.delay(j, X, q), U, p)


def _sample(v: Callable, t: np.ndarray) -> np.ndarray:
    return np.atleast_2d(np.asarray(v(t), dtype=float))


def _sample_derivative(v: Callable, t: np.ndarray) -> np.ndarray:
    derivative = getattr(v, "derivative", None)
    if derivative is None:
        raise TypeError(f"History {v!r} must provide derivative(t) for linearization")
    return np.atleast_2d(np.asarray(derivative(t), dtype=float))


def _split_mu(mu: Sequence[float]) -> Tuple[float, np.ndarray]:
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    T = float(mu[0])
    if not T > 0.0:
        raise NonpositivePeriodError(T)
    return T, mu[1:]


def _history(prob: ProblemDefinition, v: Callable, t: np.ndarray, T: float, p: np.ndarray):
    """Delayed states U, deviated arguments theta and delays tau along the sequential definition."""
    n_points = t.size
    U = np.zeros((prob.n_y, prob.n_d + 1, n_points))
    thetas = np.zeros((prob.n_d + 1, n_points))
    taus = np.zeros((prob.n_d, n_points))

    thetas[0] = t
    U[:, 0, :] = _sample(v, t)
    for j in range(1, prob.n_d + 1):
        tau_j = prob.delay(j, U[:, :j, :], p)
        if not np.all(np.isfinite(tau_j)):
            bad = int(np.argmax(~np.isfinite(tau_j)))
            raise DelayEvaluationError(j, f"at t={t[bad]:.17g}")
        taus[j - 1] = tau_j
        thetas[j] = t - tau_j / T
        U[:, j, :] = _sample(v, thetas[j])
    return U, thetas, taus


def rhs_G(prob: ProblemDefinition, v: Callable, t: Union[float, np.ndarray], mu: Sequence[float]) -> np.ndarray:
    """G(v, mu)(t) = T * f(v(t), v(t - tau_1/T), ..., p); deviated arguments wrap mod 1 inside v.

    Scalar t gives shape (n_y,), an array of N times gives (n_y, N).
    """
    T, p = _split_mu(mu)
    times = np.atleast_1d(np.asarray(t, dtype=float))
    U, _, _ = _history(prob, v, times, T, p)
    G = T * prob.rhs(U, p)
    return G[:, 0] if np.ndim(t) == 0 else G


@dataclass(frozen=True, eq=False)
class RhsLinearization:
    """Linearization of G at N points: dG = sum_l K_l dv(theta_l) + M dmu.

    thetas: (n_d+1, N) deviated arguments (theta_0 = t)
    state_coefficients: (n_d+1, n_y, n_y, N)
    parameter_coefficients: (n_y, n_mu, N)
    """

    values: np.ndarray
    thetas: np.ndarray
    state_coefficients: np.ndarray
    parameter_coefficients: np.ndarray

    def apply(self, dv: Callable, dmu: Sequence[float]) -> np.ndarray:
        dmu = np.atleast_1d(np.asarray(dmu, dtype=float))
        result = np.einsum("aqn,q->an", self.parameter_coefficients, dmu)
        for theta, K in zip(self.thetas, self.state_coefficients):
            result = result + np.einsum("abn,bn->an", K, _sample(dv, theta))
        return result


def linearize_rhs(prob: ProblemDefinition, v: Callable, t: Union[float, np.ndarray], mu: Sequence[float]) -> RhsLinearization:
    """Chain-rule coefficients of G through f, the delay functions and the deviated arguments.

    v must provide derivative(t); on a breakpoint the LEFT derivative enters.
    """
    T, p = _split_mu(mu)
    times = np.atleast_1d(np.asarray(t, dtype=float))
    U, thetas, taus = _history(prob, v, times, T, p)

    n_y, n_d, n_mu, n_points = prob.n_y, prob.n_d, prob.n_mu, times.size
    identity = np.broadcast_to(np.eye(n_y)[:, :, None], (n_y, n_y, n_points))

    # dU_k = sum_l A[k, l] dv(theta_l) + B[k] dmu
    A = np.zeros((n_d + 1, n_d + 1, n_y, n_y, n_points))
    B = np.zeros((n_d + 1, n_y, n_mu, n_points))
    A[0, 0] = identity

    for j in range(1, n_d + 1):
        g = prob.delay_state_partials(j, U[:, :j, :], p)
        g_p = prob.delay_parameter_partials(j, U[:, :j, :], p)

        # d tau_j = sum_l r[l] . dv(theta_l) + s . dmu
        r = np.zeros((j, n_y, n_points))
        for l in range(j):
            for k in range(l, j):
                r[l] += np.einsum("ban,bn->an", A[k, l], g[:, k, :])
        s = np.zeros((n_mu, n_points))
        for k in range(j):
            s += np.einsum("bqn,bn->qn", B[k], g[:, k, :])
        s[1:] += g_p

        slope = _sample_derivative(v, thetas[j])
        A[j, j] = identity
        for l in range(j):
            A[j, l] = -slope[:, None, :] * r[l][None, :, :] / T
        dtheta = -s / T
        dtheta[0] += taus[j - 1] / T**2
        B[j] = slope[:, None, :] * dtheta[None, :, :]

    f_values = prob.rhs(U, p)
    df_du = prob.state_partials(U, p)
    df_dp = prob.parameter_partials(U, p)

    K = np.zeros((n_d + 1, n_y, n_y, n_points))
    for l in range(n_d + 1):
        for k in range(l, n_d + 1):
            K[l] += T * np.einsum("abn,bcn->acn", df_du[:, :, k, :], A[k, l])

    M = np.zeros((n_y, n_mu, n_points))
    for k in range(n_d + 1):
        M += T * np.einsum("abn,bqn->aqn", df_du[:, :, k, :], B[k])
    M[:, 0, :] += f_values
    M[:, 1:, :] += T * df_dp

    return RhsLinearization(values=T * f_values, thetas=thetas, state_coefficients=K, parameter_coefficients=M)


def rhs_G_jacobian_action(
    prob: ProblemDefinition,
    v: Callable,
    t: Union[float, np.ndarray],
    mu: Sequence[float],
    dv: Callable,
    dmu: Sequence[float],
) -> np.ndarray:
    """Directional derivative of rhs_G at (v, mu) in direction (dv, dmu)."""
    action = linearize_rhs(prob, v, t, mu).apply(dv, dmu)
    return action[:, 0] if np.ndim(t) == 0 else action


@dataclass(frozen=True)
class DerivativeCheck:
    """Result of comparing supplied derivatives with central differences."""

    max_error: float
    rtol: float
    n_points: int
    worst: str = ""

    @property
    def is_valid(self) -> bool:
        return self.max_error <= self.rtol


def _relative_error(supplied: np.ndarray, reference: np.ndarray) -> float:
    scale = max(1.0, float(np.max(np.abs(reference), initial=0.0)))
    return float(np.max(np.abs(supplied - reference), initial=0.0)) / scale


def validate_derivatives(
    prob: ProblemDefinition,
    rng: Optional[np.random.Generator] = None,
    n_points: int = 50,
    scale: float = 1.0,
    rtol: float = 1e-5,
) -> DerivativeCheck:
    """Compare df and dtau against central differences at random (U, p)."""
    rng = rng if rng is not None else np.random.default_rng(0)
    U = scale * rng.standard_normal((prob.n_y, prob.n_d + 1, n_points))
    p = 1.0 + scale * rng.standard_normal(prob.n_p)

    errors: Dict[str, float] = {}
    if prob.df_du is not None:
        errors["df_du"] = _relative_error(prob.state_partials(U, p), _difference_state(prob.rhs, U, p))
    if prob.df_dp is not None and prob.n_p > 0:
        errors["df_dp"] = _relative_error(prob.parameter_partials(U, p), _difference_parameters(prob.rhs, U, p))
    for j in range(1, prob.n_d + 1):
        block = U[:, :j, :]
        delay = lambda X, q, j=j: prob.delay(j, X, q)  # noqa: E731
        if prob.dtau_du[j - 1] is not None:
            errors[f"dtau_du[{j}]"] = _relative_error(prob.delay_state_partials(j, block, p), _difference_state(delay, block, p))
        if prob.dtau_dp[j - 1] is not None and prob.n_p > 0:
            errors[f"dtau_dp[{j}]"] = _relative_error(
                prob.delay_parameter_partials(j, block, p), _difference_parameters(delay, block, p)
            )

    worst = max(errors, key=errors.get) if errors else ""
    max_error = errors.get(worst, 0.0)
    if max_error > rtol:
        logger.warning(f"Problem '{prob.name}': derivative check failed for {worst} (error {max_error:.3e})")
    return DerivativeCheck(max_error=max_error, rtol=rtol, n_points=n_points, worst=worst)


@dataclass(frozen=True, eq=False)
class PointTerm:
    """weights @ v(time), weights of shape (n_c, n_y)."""

    time: float
    weights: np.ndarray


@dataclass(frozen=True, eq=False)
class IntegralTerm:
    """int_0^1 W(t) v(t) dt with kernel(ts) of shape (n_c, n_y, N)."""

    kernel: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class ParameterTerm:
    """matrix @ mu, matrix of shape (n_c, n_mu)."""

    matrix: np.ndarray


@dataclass(frozen=True, eq=False)
class OffsetTerm:
    offset: np.ndarray


ConstraintTerm = Union[PointTerm, IntegralTerm, ParameterTerm, OffsetTerm]


@dataclass(frozen=True, eq=False)
class AffineConstraints:
    """R_aff[v, mu] as a sum of affine terms.

    Integral terms use composite Gauss quadrature with degree + quadrature_boost
    points per interval of the solution's own mesh.
    """

    n_c: int
    terms: Tuple[ConstraintTerm, ...] = field(default_factory=tuple)
    quadrature_boost: int = 2

    def _quadrature(self, mesh: Mesh) -> Tuple[np.ndarray, np.ndarray]:
        return mesh.quadrature(mesh.degree + self.quadrature_boost)

    def evaluate(self, v: Callable, mu: Sequence[float], mesh: Optional[Mesh] = None) -> np.ndarray:
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        mesh = getattr(v, "mesh", None) or mesh
        total = np.zeros(self.n_c)
        for term in self.terms:
            if isinstance(term, PointTerm):
                total += np.asarray(term.weights) @ _sample(v, np.array([term.time]))[:, 0]
            elif isinstance(term, IntegralTerm):
                if mesh is None:
                    raise ValueError("Integral constraint needs a mesh for its quadrature")
                nodes, weights = self._quadrature(mesh)
                total += np.einsum("cyn,yn,n->c", term.kernel(nodes), _sample(v, nodes), weights)
            elif isinstance(term, ParameterTerm):
                total += np.asarray(term.matrix) @ mu
            elif isinstance(term, OffsetTerm):
                total += np.asarray(term.offset, dtype=float)
            else:
                raise TypeError(f"Unknown constraint term {term!r}")
        return total

    def linear_coefficients(self, mesh: Mesh, n_y: int, n_mu: int) -> Tuple[np.ndarray, np.ndarray]:
        """Exact coefficients (C_v, C_mu) with R_aff = C_v c + C_mu mu + const for nodal values c.

        C_v has shape (n_c, n_y * m * L) in component-major node order.
        """
        C_v = np.zeros((self.n_c, n_y, mesh.n_nodes))
        C_mu = np.zeros((self.n_c, n_mu))
        for term in self.terms:
            if isinstance(term, PointTerm):
                idx, rows = mesh.value_basis(term.time)
                weights = np.asarray(term.weights, dtype=float)
                for c in range(self.n_c):
                    for y in range(n_y):
                        np.add.at(C_v[c, y], idx[0], weights[c, y] * rows[0])
            elif isinstance(term, IntegralTerm):
                nodes, quad_weights = self._quadrature(mesh)
                idx, rows = mesh.value_basis(nodes)
                kernel = term.kernel(nodes)
                for c in range(self.n_c):
                    for y in range(n_y):
                        contributions = (kernel[c, y] * quad_weights)[:, None] * rows
                        np.add.at(C_v[c, y], idx.ravel(), contributions.ravel())
            elif isinstance(term, ParameterTerm):
                C_mu += np.asarray(term.matrix, dtype=float)
        return C_v.reshape(self.n_c, n_y * mesh.n_nodes), C_mu


ConstraintFamily = Callable[[float], AffineConstraints]
ProblemBundle = Tuple[ProblemDefinition, ConstraintFamily]


def _negated_delayed_state(U: np.ndarray, p: np.ndarray) -> np.ndarray:
    return -U[:, 1, :]


def _negated_delayed_state_du(U: np.ndarray, p: np.ndarray) -> np.ndarray:
    out = np.zeros((1, 1, 2, U.shape[-1]))
    out[0, 0, 1, :] = -1.0
    return out


def _no_parameter_dependence(U: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.zeros((1, 1, U.shape[-1]))


def _state_dependent_delay(U: np.ndarray, p: np.ndarray) -> np.ndarray:
    return p[0] + U[0, 0, :]


def _constant_delay(U: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.full(U.shape[-1], p[0])


def _unit_state_partial(U: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.ones((1, 1, U.shape[-1]))


def _zero_state_partial(U: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.zeros((1, 1, U.shape[-1]))


def _unit_parameter_partial(U: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.ones((1, U.shape[-1]))


def _sine_kernel(ts: np.ndarray) -> np.ndarray:
    kernel = np.zeros((2, 1, ts.size))
    kernel[1, 0, :] = 2.0 * np.sin(2.0 * np.pi * ts)
    return kernel


def amplitude_constraints(y0: float) -> AffineConstraints:
    """[v(0); 2 int_0^1 sin(2 pi t) v(t) dt - y0]: phase condition and amplitude parametrization."""
    return AffineConstraints(
        n_c=2,
        terms=(
            PointTerm(0.0, np.array([[1.0], [0.0]])),
            IntegralTerm(_sine_kernel),
            OffsetTerm(np.array([0.0, -float(y0)])),
        ),
    )


def builtin_sd_proto() -> ProblemBundle:
    """y'(t) = -T y(t - (p + y(t))/T): the scalar state-dependent delay prototype."""
    problem = ProblemDefinition(
        name="sd_proto",
        n_y=1,
        n_p=1,
        f=_negated_delayed_state,
        tau=(_state_dependent_delay,),
        df_du=_negated_delayed_state_du,
        df_dp=_no_parameter_dependence,
        dtau_du=(_unit_state_partial,),
        dtau_dp=(_unit_parameter_partial,),
        smoothness_order=math.inf,
        description="y'(t) = -y(t - p - y(t)), Hopf point T = 2pi, p = pi/2",
    )
    return problem, amplitude_constraints


def builtin_cd_proto() -> ProblemBundle:
    """y'(t) = -T y(t - p/T): constant-delay linear variant with exact solutions y0 sin(2 pi t)."""
    problem = ProblemDefinition(
        name="cd_proto",
        n_y=1,
        n_p=1,
        f=_negated_delayed_state,
        tau=(_constant_delay,),
        df_du=_negated_delayed_state_du,
        df_dp=_no_parameter_dependence,
        dtau_du=(_zero_state_partial,),
        dtau_dp=(_unit_parameter_partial,),
        smoothness_order=math.inf,
        description="y'(t) = -y(t - p), exact solution y0 sin(2 pi t) at T = 2pi, p = pi/2",
    )
    return problem, amplitude_constraints
