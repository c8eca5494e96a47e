"""Orbit iteration with transient handling, constraint monitoring,
synchronization metrics and periodicity detection.

Iteration follows the discard protocol used throughout the model's
numerical experiments: a transient prefix is dropped, a fixed window is
recorded, and any step that violates the leverage floor (lambda_i >= 1)
or the stationarity bound (mean field < 1 + gamma) truncates the run.
Violations are data, not exceptions: the trace records where and why
the orbit left the feasible region so survival statistics stay exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientTraceError
from .params import LeverageState, ModelParams

#: constraint names used in violation records
LEVERAGE_FLOOR = "leverage_floor"
AR1_STATIONARITY = "ar1_stationarity"

#: exponent threshold above which an unresolved period counts as aperiodic
APERIODIC_EXPONENT_MIN = 1e-3


@dataclass(frozen=True)
class OrbitTrace:
    """A recorded trajectory of the coupled map.

    ``recorded`` holds one row per post-transient step, truncated at the
    first violating step (the violating state itself is not recorded).
    ``violation`` is None for a clean run, else (step index, constraint
    name) with steps counted from 1 at the first map application.
    """

    params: ModelParams
    initial: LeverageState
    transient_len: int
    recorded: np.ndarray
    violation: tuple[int, str] | None

    @property
    def survived(self) -> bool:
        return self.violation is None

    @property
    def n_recorded(self) -> int:
        return int(self.recorded.shape[0])


@dataclass(frozen=True)
class PeriodReport:
    """Detected minimal period, or None when no period passed the test.

    A reported period p means every pair of states p steps apart agrees
    componentwise within ``tol`` across the whole verification window,
    and no smaller lag does.
    """

    period: int | None
    tol: float
    window: int

    @property
    def aperiodic(self) -> bool:
        return self.period is None

    @property
    def label(self) -> str:
        return "aperiodic" if self.period is None else str(self.period)


def _run(
    lambdas: list[float],
    params: ModelParams,
    transient: int,
    record: int,
) -> tuple[np.ndarray, tuple[int, str] | None]:
    """Shared iteration core: python-float inner loop for small N.

    Arithmetic matches maps.advance term for term (mean field
    accumulated left to right, kernel formed once per step) so traces
    and map evaluations agree bitwise.
    """
    gamma = params.gamma
    lam_max = params.lambda_max
    coef = params.coupling_coef
    omegas = params.omegas
    pis = params.pis
    n = len(lambdas)
    recorded = np.empty((record, n))
    kept = 0
    violation = None
    lams = list(lambdas)
    sqrt = math.sqrt
    m = 0.0
    for i in range(n):
        m += pis[i] * lams[i]
    for step in range(1, transient + record + 1):
        # the map is undefined once the mean field reaches 1 + gamma
        if not m < lam_max:
            violation = (step, AR1_STATIONARITY)
            break
        d = 1.0 + gamma - m
        kernel = coef / (d * d)
        ok = True
        for i in range(n):
            lam = lams[i]
            w = omegas[i]
            g = w / (lam * lam) + (1.0 - w) * kernel
            new = 1.0 / sqrt(g)
            if new < 1.0:
                ok = False
            lams[i] = new
        if not ok:
            violation = (step, LEVERAGE_FLOOR)
            break
        m = 0.0
        for i in range(n):
            m += pis[i] * lams[i]
        # a state already past the bound is infeasible and never recorded;
        # exactly on the bound it is feasible but the next step cannot run
        if m > lam_max:
            violation = (step, AR1_STATIONARITY)
            break
        if step > transient:
            recorded[kept] = lams
            kept += 1
    return recorded[:kept], violation


def iterate(
    initial: LeverageState,
    params: ModelParams,
    transient: int = 1000,
    record: int = 800,
) -> OrbitTrace:
    """Iterate the coupled map, discarding ``transient`` steps then
    recording the next ``record`` states.

    The initial state must be feasible.  Recording stops at the first
    constraint violation; the trace then carries (step, constraint)
    metadata instead of raising.
    """
    initial.require_feasible()
    if transient < 0 or record < 0:
        raise ValueError("transient and record must be non-negative")
    recorded, violation = _run(list(initial.lambdas), params, transient, record)
    return OrbitTrace(
        params=params,
        initial=initial,
        transient_len=transient,
        recorded=recorded,
        violation=violation,
    )


def sync_metric(state: LeverageState, i: int, j: int) -> float:
    """Pairwise synchronization distance |l_i - l_j| / (l_i + l_j).

    Lives in [0, 1) for positive leverages; identically zero on the
    diagonal.  Along homogeneous orbits (equal memory weights) it is
    strictly decreasing.
    """
    lams = state.lambdas
    if not (0 <= i < len(lams)) or not (0 <= j < len(lams)):
        raise IndexError(f"bank index out of range: ({i}, {j}) for N={len(lams)}")
    a, b = lams[i], lams[j]
    return abs(a - b) / (a + b)


def pair_sync(a: float, b: float) -> float:
    """sync_metric on raw leverages, for tight loops."""
    return abs(a - b) / (a + b)


def detect_period(
    trace: OrbitTrace, p_max: int = 64, tol: float = 1e-7
) -> PeriodReport:
    """Minimal period p <= p_max passing the window test, else aperiodic.

    Verifies over the last 3 * p_max recorded states: for a candidate
    lag p every pair of rows p apart must agree componentwise within
    tol.  Requires a clean trace with at least 3 * p_max recorded steps.
    """
    if not trace.survived:
        raise InsufficientTraceError(
            f"trace violated {trace.violation[1]} at step {trace.violation[0]}"
        )
    window = 3 * p_max
    if trace.n_recorded < window:
        raise InsufficientTraceError(
            f"need at least {window} recorded steps, have {trace.n_recorded}"
        )
    w = trace.recorded[-window:]
    for p in range(1, p_max + 1):
        if np.max(np.abs(w[p:] - w[:-p])) < tol:
            return PeriodReport(period=p, tol=tol, window=window)
    return PeriodReport(period=None, tol=tol, window=window)


@dataclass(frozen=True)
class FeasibleSetEstimate:
    """Monte-Carlo under-approximation of the surviving initial set."""

    survival_fraction: float
    survivors: np.ndarray
    n_samples: int
    horizon: int
    rng_seed: int


def estimate_feasible_set(
    params: ModelParams,
    n_samples: int,
    horizon: int,
    rng_seed: int,
) -> FeasibleSetEstimate:
    """Sample initial conditions uniformly in [1, 1+gamma]^N and keep
    those whose orbits stay feasible for ``horizon`` steps."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    draws = rng.uniform(1.0, params.lambda_max, size=(n_samples, params.n_banks))
    survivors = []
    for row in draws:
        state = LeverageState.from_lambdas(row, params)
        if not state.feasible:
            continue
        _, violation = _run(list(state.lambdas), params, horizon, 0)
        if violation is None:
            survivors.append(row)
    kept = np.array(survivors) if survivors else np.empty((0, params.n_banks))
    return FeasibleSetEstimate(
        survival_fraction=len(survivors) / n_samples,
        survivors=kept,
        n_samples=n_samples,
        horizon=horizon,
        rng_seed=rng_seed,
    )


def classify(
    period: PeriodReport | None,
    top_exponent: float | None,
    survived: bool,
) -> str:
    """Dynamics class of one parameter point.

    Precedence: infeasible > fixed-point > periodic-p > aperiodic.
    Aperiodic additionally requires a clearly positive top exponent
    (> APERIODIC_EXPONENT_MIN) so slow transients are not misread as
    chaos; the rare leftover case is reported as "unresolved".
    """
    if not survived:
        return "infeasible"
    if period is not None and period.period is not None:
        if period.period == 1:
            return "fixed-point"
        return f"period-{period.period}"
    if top_exponent is not None and top_exponent > APERIODIC_EXPONENT_MIN:
        return "aperiodic"
    return "unresolved"
