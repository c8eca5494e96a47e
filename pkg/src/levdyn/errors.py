"""Exception types shared across the package."""

from __future__ import annotations


class LevdynError(Exception):
    """Base class for all package errors."""


class DomainError(LevdynError, ValueError):
    """Map evaluated outside its mathematical domain."""


class InfeasibleStateError(LevdynError):
    """A leverage state violates a model constraint.

    ``constraint`` names the violated condition: ``"leverage_floor"``
    (some leverage below 1) or ``"ar1_stationarity"`` (mean-field
    leverage at or above 1 + gamma).
    """

    def __init__(self, constraint: str, message: str | None = None):
        self.constraint = constraint
        super().__init__(message or f"infeasible state: {constraint}")


class OrbitViolationError(LevdynError):
    """An orbit left the feasible region where a result is undefined."""

    def __init__(self, step: int, constraint: str):
        self.step = step
        self.constraint = constraint
        super().__init__(f"orbit violated {constraint} at step {step}")


class InsufficientTraceError(LevdynError):
    """Trace too short (or truncated) for the requested analysis."""


class DegenerateCloudError(LevdynError):
    """Point cloud has zero extent along at least one axis."""


class TailBoundError(LevdynError):
    """Truncation error bound exceeds the requested tolerance."""

    def __init__(self, bound: float, tol: float, depth: int):
        self.bound = bound
        self.tol = tol
        self.depth = depth
        super().__init__(
            f"tail bound {bound:.3e} exceeds tolerance {tol:.3e} at depth {depth}"
        )


class InsolvencyError(LevdynError):
    """A bank's equity dropped to zero or below during a simulation."""

    def __init__(self, period: int, bank: int):
        self.period = period
        self.bank = bank
        super().__init__(f"bank {bank} insolvent in period {period}")


class NonstationaryError(LevdynError):
    """Estimated AR(1) coefficient left the stationary region."""

    def __init__(self, period: int, phi_hat: float):
        self.period = period
        self.phi_hat = phi_hat
        super().__init__(f"|phi_hat| = {abs(phi_hat):.6f} >= 1 in period {period}")


class ConfigError(LevdynError):
    """Invalid experiment configuration.

    ``key`` points at the offending entry (dotted path) when known.
    """

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(message if key is None else f"{key}: {message}")
