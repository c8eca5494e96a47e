"""Slow-fast stochastic market simulator underlying the deterministic map.

Each slow period runs n intraday trading ticks.  During a period every
bank holds its target leverage fixed and rebalances toward target
assets A*_i = lambda_i * E_i; the aggregate rebalancing demand feeds
back into returns through a linear price impact with depth gamma:

    r_s = phi_s r_{s-1} + eps_s,
    phi_s = sum_i (lambda_i - 1) A*_i / (gamma sum_i A*_i),

with exogenous shocks eps_s ~ N(0, sigma_eps_sq / n).  At the period
close each bank re-estimates the return variance by conditional least
squares on the tick series, aggregates it through 1/(1 - phi_hat)^2,
blends it into its running estimate with memory omega_i, and sets the
next target leverage 1/(alpha sigma).  As n grows the estimator noise
shrinks at the CLT rate and the slow dynamics converge to the
deterministic coupled map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsolvencyError, NonstationaryError
from .maps import advance
from .params import ModelParams, mean_field

#: variance estimates are floored here to keep leverage finite
SIGMA_SQ_FLOOR = 1e-18


@dataclass(frozen=True)
class MicroParams:
    """Simulation setup for the intraday market.

    ``sigma_eps_step_sq`` is derived as sigma_eps_sq / n_intraday so the
    per-step and aggregated variances always match.
    """

    base: ModelParams
    n_intraday: int
    horizon: int
    rng_seed: int = 0
    equity_total: float = 1.0
    zero_noise: bool = False

    def __post_init__(self) -> None:
        if self.n_intraday < 2:
            raise ValueError(f"n_intraday must be >= 2, got {self.n_intraday}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if not self.equity_total > 0:
            raise ValueError("equity_total must be positive")

    @property
    def sigma_eps_step_sq(self) -> float:
        return self.base.sigma_eps_sq / self.n_intraday


@dataclass
class MicroState:
    """Intra-period market state (mutated tick by tick)."""

    equities: list[float]
    target_assets: list[float]
    lambdas: list[float]
    sigma_sq: list[float]
    last_return: float
    weights: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.weights:
            self.weights = _weights(self.target_assets)


def _weights(target_assets: list[float]) -> list[float]:
    total = math.fsum(target_assets)
    return [a / total for a in target_assets]


def _tick(
    equities: list[float],
    target_assets: list[float],
    lambdas: list[float],
    r_prev: float,
    gamma: float,
    eps: float,
) -> tuple[float, list[float]]:
    """Advance one intraday tick in place; returns (r_s, new weights).

    Equity hitting zero raises the private _Insolvent sentinel carrying
    the bank index; callers attach the period and re-raise the public
    error.
    """
    n = len(equities)
    demand_coef = 0.0
    total_assets = 0.0
    for i in range(n):
        a = target_assets[i]
        demand_coef += (lambdas[i] - 1.0) * a
        total_assets += a
    phi_s = demand_coef / (gamma * total_assets)
    r = phi_s * r_prev + eps
    total_new = 0.0
    for i in range(n):
        e = equities[i] + r * target_assets[i]
        if e <= 0.0:
            raise _Insolvent(i)
        equities[i] = e
        a = lambdas[i] * e
        target_assets[i] = a
        total_new += a
    weights = [a / total_new for a in target_assets]
    return r, weights


class _Insolvent(Exception):
    def __init__(self, bank: int):
        self.bank = bank


def step_intraday(
    state: MicroState, params: MicroParams, rng: np.random.Generator
) -> MicroState:
    """One intraday tick: draw a shock, propagate the return, mark
    equities to market and rebalance to target assets.

    Pure with respect to its input (works on copies); the bulk
    simulator reuses the same arithmetic in place.  Insolvency raised
    here carries period -1 (standalone tick outside a period loop).
    """
    for i, e in enumerate(state.equities):
        if not e > 0.0:
            raise InsolvencyError(period=-1, bank=i)
    equities = list(state.equities)
    target_assets = list(state.target_assets)
    eps = float(rng.normal(0.0, math.sqrt(params.sigma_eps_step_sq)))
    try:
        r, weights = _tick(
            equities, target_assets, state.lambdas, state.last_return,
            params.base.gamma, eps,
        )
    except _Insolvent as exc:
        raise InsolvencyError(period=-1, bank=exc.bank) from None
    return MicroState(
        equities=equities,
        target_assets=target_assets,
        lambdas=list(state.lambdas),
        sigma_sq=list(state.sigma_sq),
        last_return=r,
        weights=weights,
    )


def close_period(
    returns: np.ndarray,
    r0: float,
    sigma_sq: list[float],
    omegas: tuple[float, ...],
    params: MicroParams,
) -> tuple[list[float], list[float], float, float, bool]:
    """Period-close estimation and leverage update.

    ``returns`` holds the n intraday returns; ``r0`` is the return just
    before the period so the AR(1) regression has n lag pairs:

        phi_hat      = sum r_s r_{s-1} / sum r_{s-1}^2
        sigma_eps^2  = (1/n) sum (r_s - phi_hat r_{s-1})^2
        sigma_e^2    = n sigma_eps^2 / (1 - phi_hat)^2

    Each bank blends sigma_e^2 into its running estimate with weight
    (1 - omega_i) and re-targets leverage 1/(alpha sigma).  Returns
    (new_lambdas, new_sigma_sq, phi_hat, sigma_eps_hat_sq, floored).
    Raises NonstationaryError when |phi_hat| >= 1.
    """
    n = len(returns)
    if n != params.n_intraday:
        raise ValueError(f"expected {params.n_intraday} returns, got {n}")
    prev = np.empty(n)
    prev[0] = r0
    prev[1:] = returns[:-1]
    den = float(np.dot(prev, prev))
    phi_hat = float(np.dot(returns, prev)) / den if den > 0.0 else 0.0
    if abs(phi_hat) >= 1.0:
        raise NonstationaryError(period=-1, phi_hat=phi_hat)
    resid = returns - phi_hat * prev
    sigma_eps_hat_sq = float(np.dot(resid, resid)) / n
    sigma_e_hat_sq = n * sigma_eps_hat_sq / ((1.0 - phi_hat) ** 2)

    alpha = params.base.alpha
    new_sigma = []
    new_lambdas = []
    floored = False
    for w, s in zip(omegas, sigma_sq):
        s_new = w * s + (1.0 - w) * sigma_e_hat_sq
        if s_new < SIGMA_SQ_FLOOR:
            s_new = SIGMA_SQ_FLOOR
            floored = True
        new_sigma.append(s_new)
        new_lambdas.append(1.0 / (alpha * math.sqrt(s_new)))
    return new_lambdas, new_sigma, phi_hat, sigma_eps_hat_sq, floored


@dataclass(frozen=True)
class MicroRun:
    """Slow-scale output of one simulation run.

    Row t of the leverage arrays is the state entering period t+1 (after
    the period-t close); the deterministic column iterates the coupled
    map from the same initial leverages with the configured weights.
    """

    lambdas_stochastic: np.ndarray
    lambdas_deterministic: np.ndarray
    pi_drift_max: np.ndarray
    phi_hat: np.ndarray
    sigma_eps_hat_sq: np.ndarray
    floored: bool


def initial_equities(params: MicroParams, lambdas: list[float]) -> list[float]:
    """Equities making the initial asset weights equal the configured pis."""
    return [
        p * params.equity_total / lam for p, lam in zip(params.base.pis, lambdas)
    ]


def run_micro(
    params: MicroParams,
    initial_lambdas: list[float] | tuple[float, ...],
    equities: list[float] | None = None,
) -> MicroRun:
    """Simulate ``horizon`` slow periods and the deterministic reference.

    In ``zero_noise`` mode the intraday market is replaced by its exact
    limit: the shock stream is zero and the aggregated variance estimate
    takes its analytic value sigma_eps_sq / (1 - phi)^2 with phi formed
    from the configured weights, which reproduces the coupled map.

    Raises InsolvencyError or NonstationaryError with the period index
    when a run aborts (mirroring the discard protocol for violating
    runs).
    """
    base = params.base
    n_banks = base.n_banks
    lambdas = [float(x) for x in initial_lambdas]
    if len(lambdas) != n_banks:
        raise ValueError(f"expected {n_banks} initial leverages")
    if any(lam < 1.0 for lam in lambdas):
        raise ValueError("initial leverages must be >= 1")
    equities = (
        initial_equities(params, lambdas) if equities is None else list(equities)
    )
    if any(e <= 0.0 for e in equities):
        raise ValueError("initial equities must be positive")
    sigma_sq = [1.0 / (base.alpha * lam) ** 2 for lam in lambdas]
    target_assets = [lam * e for lam, e in zip(lambdas, equities)]
    rng = np.random.default_rng(params.rng_seed)
    n = params.n_intraday
    sigma_step = math.sqrt(params.sigma_eps_step_sq)

    lam_sto = np.empty((params.horizon, n_banks))
    lam_det = np.empty((params.horizon, n_banks))
    drift = np.zeros(params.horizon)
    phis = np.empty(params.horizon)
    sig_eps = np.empty(params.horizon)
    floored_any = False

    det = list(lambdas)
    for t in range(params.horizon):
        if params.zero_noise:
            m = mean_field(lambdas, base.pis)
            phi = base.ar1_coef(m)
            sigma_e_sq = base.sigma_eps_sq / ((1.0 - phi) ** 2)
            new_sigma = []
            new_lams = []
            for w, s in zip(base.omegas, sigma_sq):
                s_new = w * s + (1.0 - w) * sigma_e_sq
                new_sigma.append(s_new)
                new_lams.append(1.0 / (base.alpha * math.sqrt(s_new)))
            sigma_sq = new_sigma
            lambdas = new_lams
            target_assets = [lam * e for lam, e in zip(lambdas, equities)]
            phis[t] = phi
            sig_eps[t] = 0.0
        else:
            # stationary seed return, with phi taken from the actual asset
            # mix (identical to the configured-weight value at period 0)
            demand = 0.0
            total = 0.0
            for i in range(n_banks):
                demand += (lambdas[i] - 1.0) * target_assets[i]
                total += target_assets[i]
            phi0 = demand / (base.gamma * total)
            if abs(phi0) >= 1.0:
                raise NonstationaryError(period=t, phi_hat=phi0)
            r = float(
                rng.normal(0.0, sigma_step / math.sqrt(1.0 - phi0 * phi0))
            )
            r0 = r
            eps_draws = rng.normal(0.0, sigma_step, n)
            returns = np.empty(n)
            weights0 = _weights(target_assets)
            max_drift = 0.0
            try:
                for s in range(n):
                    r, weights = _tick(
                        equities, target_assets, lambdas, r,
                        base.gamma, float(eps_draws[s]),
                    )
                    returns[s] = r
                    for i in range(n_banks):
                        d = abs(weights[i] - weights0[i])
                        if d > max_drift:
                            max_drift = d
            except _Insolvent as exc:
                raise InsolvencyError(period=t, bank=exc.bank) from None
            try:
                lambdas, sigma_sq, phi_hat, s_eps, floored = close_period(
                    returns, r0, sigma_sq, base.omegas, params
                )
            except NonstationaryError as exc:
                raise NonstationaryError(period=t, phi_hat=exc.phi_hat) from None
            floored_any = floored_any or floored
            target_assets = [lam * e for lam, e in zip(lambdas, equities)]
            drift[t] = max_drift
            phis[t] = phi_hat
            sig_eps[t] = s_eps
        lam_sto[t] = lambdas
        det = advance(det, base)
        lam_det[t] = det
    return MicroRun(
        lambdas_stochastic=lam_sto,
        lambdas_deterministic=lam_det,
        pi_drift_max=drift,
        phi_hat=phis,
        sigma_eps_hat_sq=sig_eps,
        floored=floored_any,
    )
