"""Exception hierarchy for the collocation solver."""


class PeriodicFDEError(Exception):
    """Base class for solver errors."""


class NonpositivePeriodError(PeriodicFDEError, ValueError):
    """Raised when the period T is not strictly positive."""

    def __init__(self, period: float):
        super().__init__(f"nonpositive period: T={period!r}")
        self.period = period


class DelayEvaluationError(PeriodicFDEError, ValueError):
    """Raised when a delay function returns a non-finite value."""

    def __init__(self, delay_index: int, detail: str = ""):
        message = f"delay {delay_index} evaluated to a non-finite value"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)
        self.delay_index = delay_index


class NonFiniteResidualError(PeriodicFDEError, ArithmeticError):
    """Raised when a collocation residual entry is NaN or infinite."""

    def __init__(self, interval: int, node: int, component: int = 0):
        super().__init__(f"non-finite residual at interval i={interval}, node j={node} (component {component})")
        self.interval = interval
        self.node = node
        self.component = component


class SingularJacobianError(PeriodicFDEError, RuntimeError):
    """Raised when the LU factorization finds a vanishing pivot."""

    def __init__(self, iteration: int):
        super().__init__(f"Jacobian singular at iteration {iteration}")
        self.iteration = iteration


class ContinuationError(PeriodicFDEError, RuntimeError):
    """Raised when a continuation step fails to converge."""

    def __init__(self, y0: float, reason: str = ""):
        message = f"continuation failed at y0={y0:.6g}"
        if reason:
            message = f"{message}: {reason}"
        super().__init__(message)
        self.y0 = y0


class MeshMismatchError(PeriodicFDEError, ValueError):
    """Raised when two meshes are not compatible for an operation."""
