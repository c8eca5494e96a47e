"""Pure map evaluations: single-bank map, coupled N-bank step, forced
fiber map, and their analytic derivatives.

Single bank with memory omega:

    T(x) = (omega/x^2 + (1-omega) K / (1+gamma-x)^2)^(-1/2),
    K = alpha^2 gamma^2 sigma_eps_sq,     x in (0, 1+gamma).

Coupled system (m is the weighted mean leverage sum pi_j lambda_j):

    lambda_i' = (omega_i/lambda_i^2 + (1-omega_i) K / (1+gamma-m)^2)^(-1/2)

Forced fiber map driven by a forcing leverage y:

    f_y(x) = (omega_1/x^2 + (1-omega_1) K / (1+gamma-y)^2)^(-1/2)

All evaluations run in 64-bit floats; every routine derives the mean
field and intermediate terms in the same order so analytic Jacobians
match orbit iteration exactly.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import DomainError
from .params import LeverageState, ModelParams, mean_field


def _check_open_domain(x: float, lambda_max: float, what: str) -> None:
    if not x > 0.0:
        raise DomainError(f"{what} must be positive, got {x}")
    if not x < lambda_max:
        raise DomainError(f"{what} must be below 1 + gamma = {lambda_max}, got {x}")


def leverage_map(x: float, omega: float, params: ModelParams) -> float:
    """Single-bank leverage update T(x).

    Requires 0 < x < 1 + gamma; the update is the inverse square root of
    a convex combination of 1/x^2 and the variance kernel at x.  For
    omega = 1 the map is the identity (up to floating-point rounding of
    the inverse square root).
    """
    _check_open_domain(x, params.lambda_max, "leverage")
    d = 1.0 + params.gamma - x
    kernel = params.coupling_coef / (d * d)
    g = omega / (x * x) + (1.0 - omega) * kernel
    return 1.0 / math.sqrt(g)


def leverage_map_deriv(x: float, omega: float, params: ModelParams) -> float:
    """Analytic derivative T'(x) = T(x)^3 [omega/x^3 - (1-omega) K/(1+gamma-x)^3]."""
    t = leverage_map(x, omega, params)
    d = 1.0 + params.gamma - x
    kernel3 = params.coupling_coef / (d * d * d)
    return t * t * t * (omega / (x * x * x) - (1.0 - omega) * kernel3)


def advance(lambdas: Sequence[float], params: ModelParams) -> list[float]:
    """One synchronous step of the coupled map on raw leverages.

    Computes the mean field once, then applies every bank's update
    against it.  Raises DomainError when a leverage is non-positive or
    the mean field reaches 1 + gamma (the variance kernel diverges).
    """
    m = mean_field(lambdas, params.pis)
    if not m < params.lambda_max:
        raise DomainError(
            f"mean field {m} at or above 1 + gamma = {params.lambda_max}"
        )
    d = 1.0 + params.gamma - m
    kernel = params.coupling_coef / (d * d)
    out = []
    for lam, omega in zip(lambdas, params.omegas):
        if not lam > 0.0:
            raise DomainError(f"leverage must be positive, got {lam}")
        g = omega / (lam * lam) + (1.0 - omega) * kernel
        out.append(1.0 / math.sqrt(g))
    return out


def coupled_step(state: LeverageState, params: ModelParams) -> LeverageState:
    """Advance a leverage state by one step of the coupled map.

    The input state must be feasible (every leverage >= 1 and mean field
    within the stationarity bound); the returned state carries a freshly
    computed mean field and feasibility flag.
    """
    state.require_feasible()
    return LeverageState.from_lambdas(advance(state.lambdas, params), params)


def coupled_jacobian(lambdas: Sequence[float], params: ModelParams) -> np.ndarray:
    """N x N Jacobian of the coupled step at the given leverages.

    Entry (i, j) = T_i^3 [omega_i delta_ij / lambda_i^3
                          - (1-omega_i) K pi_j / (1+gamma-m)^3]
    where T_i is the updated leverage of bank i.
    """
    new = advance(lambdas, params)
    m = mean_field(lambdas, params.pis)
    d = 1.0 + params.gamma - m
    kernel3 = params.coupling_coef / (d * d * d)
    n = len(new)
    jac = np.empty((n, n))
    for i in range(n):
        ti = new[i]
        ti3 = ti * ti * ti
        lam = lambdas[i]
        own = params.omegas[i] / (lam * lam * lam)
        coupling = (1.0 - params.omegas[i]) * kernel3
        for j in range(n):
            entry = -coupling * params.pis[j]
            if i == j:
                entry += own
            jac[i, j] = ti3 * entry
    return jac


def fiber_map(x: float, y: float, omega1: float, params: ModelParams) -> float:
    """Forced-bank update f_y(x) under a fixed forcing leverage y.

    Monotonically increasing and concave in x, with horizontal asymptote
    ((1-omega1) var_kernel(y))^(-1/2) as x grows.  Requires x > 0 and
    y < 1 + gamma.
    """
    if not x > 0.0:
        raise DomainError(f"leverage must be positive, got {x}")
    if not y < params.lambda_max:
        raise DomainError(
            f"forcing leverage must be below 1 + gamma = {params.lambda_max}, got {y}"
        )
    g = omega1 / (x * x) + (1.0 - omega1) * params.var_kernel(y)
    return 1.0 / math.sqrt(g)


def fiber_map_deriv(x: float, y: float, omega1: float, params: ModelParams) -> float:
    """d f_y / dx = omega1 (f_y(x)/x)^3.

    The product of these factors along an orbit telescopes to
    omega1^n (x_n/x_0)^3, which pins the fiber Lyapunov exponent at
    ln(omega1) up to a boundary term.
    """
    f = fiber_map(x, y, omega1, params)
    r = f / x
    return omega1 * r * r * r


def fiber_asymptote(y: float, omega1: float, params: ModelParams) -> float:
    """Large-x limit of f_y: ((1-omega1) var_kernel(y))^(-1/2)."""
    if omega1 >= 1.0:
        raise DomainError("asymptote undefined for omega1 = 1 (identity fiber)")
    return 1.0 / math.sqrt((1.0 - omega1) * params.var_kernel(y))
