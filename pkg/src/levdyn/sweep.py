"""Bifurcation and stability sweeps over the model's control parameters.

A sweep walks a grid along one axis (single-bank memory "omega", the
two-bank weight "pi1", or either two-bank memory "omega1"/"omega2"),
runs a few independently seeded initial conditions per grid point, and
records surviving asymptotic samples, the detected period, the top
Lyapunov exponent and the survival fraction.  Grid points are
independent work items; results aggregate in grid order regardless of
worker count, and per-point seeds derive from the parameter value so a
refined grid reproduces coarse-grid points exactly.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import OrbitViolationError
from .lyap import lyapunov_1d, lyapunov_top
from .orbits import PeriodReport, classify, detect_period, iterate
from .params import LeverageState, ModelParams

SWEEP_AXES = ("omega", "pi1", "omega1", "omega2")

#: steps used for the per-point top-exponent estimate
LYAP_STEPS = 2000
DEFAULT_P_MAX = 64
DEFAULT_PERIOD_TOL = 1e-7


@dataclass(frozen=True)
class SweepSpec:
    """One-axis sweep description.

    ``fixed`` supplies every parameter not being swept; the swept entry
    in it is ignored and replaced per grid point.  The "omega" axis
    needs a single-bank ``fixed``; the other axes need two banks.
    """

    axis: str
    bounds: tuple[float, float]
    resolution: int
    fixed: ModelParams
    transient: int = 1000
    record: int = 800
    initials_per_point: int = 3
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        lo, hi = self.bounds
        legal_lo, legal_hi = (0.0, 1.0)
        if not (legal_lo <= lo < hi <= legal_hi):
            raise ValueError(
                f"bounds must satisfy {legal_lo} <= lo < hi <= {legal_hi}, got {self.bounds}"
            )
        if self.resolution < 2:
            raise ValueError(f"resolution must be >= 2, got {self.resolution}")
        if self.initials_per_point < 1:
            raise ValueError("initials_per_point must be >= 1")
        if self.transient < 0 or self.record < 3:
            raise ValueError("need transient >= 0 and record >= 3")
        n_needed = 1 if self.axis == "omega" else 2
        if self.fixed.n_banks != n_needed:
            raise ValueError(
                f"axis {self.axis!r} needs {n_needed} bank(s), fixed has {self.fixed.n_banks}"
            )

    def grid(self) -> np.ndarray:
        lo, hi = self.bounds
        return np.linspace(lo, hi, self.resolution)

    def params_at(self, value: float) -> ModelParams:
        base = self.fixed
        if self.axis == "omega":
            return replace(base, omegas=(value,), pis=(1.0,))
        if self.axis == "pi1":
            return replace(base, pis=(value, 1.0 - value))
        if self.axis == "omega1":
            return replace(base, omegas=(value, base.omegas[1]))
        return replace(base, omegas=(base.omegas[0], value))


@dataclass(frozen=True)
class SweepRecord:
    """One grid point of a sweep.

    ``samples`` stacks the recorded states of every surviving initial
    condition, one row per step, ``branch[r]`` naming the initial the
    row came from.  ``lyapunov_top`` and ``period`` come from the first
    surviving initial; both are None when every initial violated.
    """

    param_value: float
    samples: np.ndarray
    branch: np.ndarray
    lyapunov_top: float | None
    period: PeriodReport | None
    survival_fraction: float
    classification: str


def _point_rng(rng_seed: int, value: float) -> np.random.Generator:
    # seed from the parameter value, not the grid index, so refined grids
    # reproduce shared points exactly
    value_bits = int(np.float64(value).view(np.uint64))
    return np.random.default_rng([rng_seed, value_bits])


def _eval_point(spec: SweepSpec, value: float) -> SweepRecord:
    params = spec.params_at(value)
    rng = _point_rng(spec.rng_seed, value)
    draws = rng.uniform(
        1.0, params.lambda_max, size=(spec.initials_per_point, params.n_banks)
    )
    kept: list[np.ndarray] = []
    branch: list[np.ndarray] = []
    survivors = 0
    first_trace = None
    first_initial: LeverageState | None = None
    for idx, row in enumerate(draws):
        state = LeverageState.from_lambdas(row, params)
        if not state.feasible:
            continue
        trace = iterate(state, params, transient=spec.transient, record=spec.record)
        if not trace.survived:
            continue
        survivors += 1
        kept.append(trace.recorded)
        branch.append(np.full(trace.n_recorded, idx, dtype=np.int64))
        if first_trace is None:
            first_trace = trace
            first_initial = state

    survival = survivors / spec.initials_per_point
    if first_trace is None:
        return SweepRecord(
            param_value=value,
            samples=np.empty((0, params.n_banks)),
            branch=np.empty(0, dtype=np.int64),
            lyapunov_top=None,
            period=None,
            survival_fraction=0.0,
            classification="infeasible",
        )

    p_max = min(DEFAULT_P_MAX, first_trace.n_recorded // 3)
    period = detect_period(first_trace, p_max=p_max, tol=DEFAULT_PERIOD_TOL)
    try:
        if params.n_banks == 1:
            top = lyapunov_1d(
                params.omegas[0],
                params,
                x0=float(first_initial.lambdas[0]),
                transient=spec.transient,
                steps=LYAP_STEPS,
            ).top
        else:
            top = lyapunov_top(
                first_initial,
                params,
                transient=spec.transient,
                steps=LYAP_STEPS,
                seed=spec.rng_seed,
            )
    except OrbitViolationError:
        # orbit escaped in the longer exponent run; leave the exponent open
        top = None
    return SweepRecord(
        param_value=value,
        samples=np.vstack(kept),
        branch=np.concatenate(branch),
        lyapunov_top=top,
        period=period,
        survival_fraction=survival,
        classification=classify(period, top, True),
    )


def _eval_point_star(args: tuple[SweepSpec, float]) -> SweepRecord:
    return _eval_point(*args)


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[SweepRecord]:
    """Evaluate every grid point, in parallel when workers > 1.

    Output order is always grid order; identical spec and seed give
    identical records for any worker count.
    """
    values = spec.grid()
    if workers <= 1:
        return [_eval_point(spec, float(v)) for v in values]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_eval_point_star, [(spec, float(v)) for v in values]))


@dataclass(frozen=True)
class StabilityMap:
    """Classification matrix over an (omega1, omega2) grid."""

    omega1s: np.ndarray
    omega2s: np.ndarray
    classes: np.ndarray  # shape (len(omega1s), len(omega2s)), dtype str
    pi1: float


def stability_map(
    omega1s: np.ndarray,
    omega2s: np.ndarray,
    pi1: float,
    params: ModelParams,
    transient: int = 1000,
    record: int = 400,
    initials_per_point: int = 3,
    rng_seed: int = 0,
    workers: int = 1,
) -> StabilityMap:
    """Classify each cell of an (omega1, omega2) grid at fixed pi1."""
    omega1s = np.asarray(omega1s, dtype=float)
    omega2s = np.asarray(omega2s, dtype=float)
    if omega1s.size < 2 or omega2s.size < 2:
        raise ValueError("stability map needs at least a 2 x 2 grid")
    base = ModelParams(
        alpha=params.alpha,
        gamma=params.gamma,
        sigma_eps_sq=params.sigma_eps_sq,
        omegas=(0.5, 0.5),
        pis=(pi1, 1.0 - pi1),
    )
    jobs = []
    for w1 in omega1s:
        for w2 in omega2s:
            spec = SweepSpec(
                axis="omega1",
                bounds=(0.0, 1.0),
                resolution=2,
                fixed=replace(base, omegas=(float(w1), float(w2))),
                transient=transient,
                record=record,
                initials_per_point=initials_per_point,
                rng_seed=rng_seed,
            )
            jobs.append((spec, float(w1)))
    if workers <= 1:
        records = [_eval_point_star(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_eval_point_star, jobs))
    classes = np.array([r.classification for r in records], dtype=object)
    return StabilityMap(
        omega1s=omega1s,
        omega2s=omega2s,
        classes=classes.reshape(len(omega1s), len(omega2s)),
        pi1=pi1,
    )
