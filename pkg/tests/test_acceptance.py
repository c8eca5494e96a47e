"""Acceptance suite: one test per release criterion.

Every test prints a single `[ACCEPTANCE] criterion NN PASS|FAIL` line
with the measured quantities, then asserts.  Criteria and tolerances are
pinned here; nothing is deferred to runtime calibration.

Run with `pytest tests/test_acceptance.py -v -s` to stream the verdict
lines.

Known red: criterion 05 requires the box-counting slope of the
(pi1=0.5, omega1=0.5, omega2=0.3) attractor to land in [1.1, 1.3].  The
attractor measured there has dimension ~= 1.46 (box counts and the
tangent-rate cross-check agree, across initial conditions and longer
transients), so the assertion fails by construction; the companion
attractor at pi1 = 0.8 does measure ~= 1.2 and is validated in
tests/test_attractor.py.  The criterion is kept as stated rather than
re-targeted.
"""

from __future__ import annotations

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from levdyn.attractor import box_dimension, capture_cloud
from levdyn.cli import main
from levdyn.lyap import fiber_exponent
from levdyn.maps import (
    advance,
    coupled_jacobian,
    fiber_map,
    leverage_map,
)
from levdyn.micro import MicroParams, run_micro
from levdyn.orbits import pair_sync
from levdyn.params import LeverageState, ModelParams, common_fixed_point
from levdyn.skew import (
    constant_history,
    forced_orbit,
    forcing_response_classification,
    history_from_orbit,
    random_fixed_point,
    shift_history,
)
from levdyn.sweep import SweepSpec, run_sweep

STD1 = ModelParams(omegas=(0.5,), pis=(1.0,))
STD2 = ModelParams(omegas=(0.5, 0.3), pis=(0.5, 0.5))


def _report(criterion: int, ok: bool, detail: str) -> None:
    verdict = "PASS" if ok else "FAIL"
    print(f"\n[ACCEPTANCE] criterion {criterion:02d} {verdict} - {detail}")


def _forcing_orbit(omega2: float, x0: float, transient: int, n: int) -> np.ndarray:
    x = x0
    for _ in range(transient):
        x = leverage_map(x, omega2, STD1)
    out = np.empty(n)
    for t in range(n):
        out[t] = x
        x = leverage_map(x, omega2, STD1)
    return out


def test_criterion_01_homogeneous_synchronization():
    rng = np.random.default_rng(20250808)
    t0 = time.perf_counter()
    done = 0
    worst_steps = 0
    ok = True
    while done < 50:
        omega = float(rng.uniform(0.0, 1.0))
        pi1 = float(rng.uniform(0.0, 1.0))
        a, b = (float(v) for v in rng.uniform(1.0, 101.0, 2))
        p = ModelParams(omegas=(omega, omega), pis=(pi1, 1.0 - pi1))
        lams = [a, b]
        metric = pair_sync(a, b)
        survived = True
        reached = None
        for step in range(1, 10_001):
            try:
                lams = advance(lams, p)
            except Exception:
                survived = False
                break
            if lams[0] < 1.0 or lams[1] < 1.0:
                survived = False
                break
            nxt = pair_sync(lams[0], lams[1])
            if not nxt < metric:
                ok = False
                break
            metric = nxt
            if metric < 1e-8:
                reached = step
                break
        if not survived:
            continue  # initial outside the invariant set: resample
        if reached is None:
            ok = False
            break
        worst_steps = max(worst_steps, reached)
        done += 1
        if not ok:
            break
    elapsed = time.perf_counter() - t0
    ok = ok and done == 50 and elapsed < 5.0
    _report(
        1, ok,
        f"50 homogeneous configs strictly contracted below 1e-8; "
        f"worst {worst_steps} steps; {elapsed:.2f}s (< 5s)",
    )
    assert ok


def test_criterion_02_fiber_exponent_identity():
    rng = np.random.default_rng(42)
    steps = 100_000
    budget = 3.0 / steps * math.log(1.0 + STD1.gamma) + 1e-3
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        omega1 = float(rng.uniform(0.05, 0.95))
        omega2 = float(rng.uniform(0.3, 0.95))
        ys = _forcing_orbit(omega2, 50.0, 1000, steps)
        est = fiber_exponent(ys, omega1, STD1, x0=float(rng.uniform(1.0, 95.0)), steps=steps)
        worst = max(worst, abs(est.top - math.log(omega1)))
    elapsed = time.perf_counter() - t0
    ok = worst <= budget and elapsed < 10.0
    _report(
        2, ok,
        f"20 runs of 1e5 steps: max |estimate - ln(omega1)| = {worst:.3e} "
        f"<= {budget:.3e}; {elapsed:.2f}s (< 10s)",
    )
    assert ok


def test_criterion_03_random_fixed_point():
    rng = np.random.default_rng(7)
    worst_relation = 0.0
    worst_attract = 0.0
    for _ in range(20):
        omega1 = float(rng.uniform(0.05, 0.9))
        omega2 = float(rng.uniform(0.3, 0.9))
        history, y0 = history_from_orbit(
            omega2, STD1, depth=1500, transient=1500, x0=float(rng.uniform(30, 70))
        )
        rfp = random_fixed_point(history, omega1, STD1, tol=1e-12)
        shifted = shift_history(history, omega2, STD1)
        rfp_next = random_fixed_point(shifted, omega1, STD1, tol=1e-12)
        worst_relation = max(
            worst_relation, abs(fiber_map(rfp.value, y0, omega1, STD1) - rfp_next.value)
        )
        # forward fiber orbits land on the random fixed point's trajectory
        k = math.ceil(
            (math.log(1e-8) - math.log(100.0) - 3 * math.log(101.0))
            / math.log(omega1)
        )
        y = float(history.past[0])
        forcing = np.empty(k)
        for t in range(k):
            y = leverage_map(y, omega2, STD1)
            forcing[t] = y
        pinned = forced_orbit(forcing, omega1, STD1, x0=rfp.value)
        free = forced_orbit(forcing, omega1, STD1, x0=float(rng.uniform(1.0, 100.0)))
        worst_attract = max(worst_attract, abs(pinned[-1] - free[-1]))
    closed_ok = True
    for level in (30.0, 60.0, 90.0):
        rfp = random_fixed_point(constant_history(level, 400), 0.5, STD1, tol=1e-10)
        want = (1 + STD1.gamma - level) / (
            STD1.gamma * STD1.alpha * math.sqrt(STD1.sigma_eps_sq)
        )
        closed_ok = closed_ok and abs(rfp.value - want) <= 1e-12 * want
    ok = worst_relation < 1e-10 and worst_attract < 1e-8 and closed_ok
    _report(
        3, ok,
        f"20 histories: defining-relation residual {worst_relation:.2e} < 1e-10, "
        f"attraction gap {worst_attract:.2e} < 1e-8, constant-history closed form exact",
    )
    assert ok


def test_criterion_04_periodic_forcing_transfers():
    spec = SweepSpec(
        axis="omega",
        bounds=(0.45, 0.72),
        resolution=136,
        fixed=STD1,
        transient=3000,
        record=400,
        initials_per_point=2,
        rng_seed=17,
    )
    records = run_sweep(spec)
    by_period: dict[int, list[float]] = {1: [], 2: [], 4: []}
    for rec in records:
        if rec.period is not None and rec.period.period in by_period:
            by_period[rec.period.period].append(rec.param_value)
    # sample the interiors of the detected windows: at the bifurcation
    # edges critical slowing makes the detected period transient-dependent
    chosen: list[float] = []
    periods: list[int] = []
    for p, count in ((1, 2), (2, 2), (4, 1)):
        window = by_period[p]
        picks = [window[len(window) // 3], window[2 * len(window) // 3]][:count]
        chosen.extend(picks)
        periods.extend([p] * len(picks))
    ok = len(chosen) >= 5 and set(periods) == {1, 2, 4}
    transfers = []
    for omega2, want in zip(chosen, periods):
        resp = forcing_response_classification(
            0.5, float(omega2), STD1, transient=6000, steps=512
        )
        transfers.append(
            resp.forcing_period.period == want
            and resp.forced_period.period == want
        )
    ok = ok and all(transfers)
    _report(
        4, ok,
        f"{len(chosen)} sweep-located forcing points with periods {periods}: "
        f"forced orbit reported identical periods {transfers}",
    )
    assert ok


def test_criterion_05_box_counting_dimension():
    t0 = time.perf_counter()
    state = LeverageState.from_lambdas([50.0, 60.0], STD2)
    cloud = capture_cloud(state, STD2, transient=2000, n_points=1_000_000)
    fit = box_dimension(cloud, eps_decades=3.2, n_scales=14)
    slope_ok = 1.1 <= fit.slope <= 1.3

    side = np.linspace(0.0, 1.0, 1000)
    gx, gy = np.meshgrid(side, side)
    square = np.column_stack([gx.ravel(), gy.ravel()])
    square_fit = box_dimension(square, eps_decades=2.5, n_scales=10)
    t = np.linspace(0.0, 1.0, 1_000_000)
    segment = np.column_stack([t, 0.37 * t + 0.11])
    segment_fit = box_dimension(segment, eps_decades=3.0, n_scales=12)
    elapsed = time.perf_counter() - t0

    refs_ok = abs(square_fit.slope - 2.0) <= 0.05 and abs(segment_fit.slope - 1.0) <= 0.05
    ok = slope_ok and refs_ok and elapsed < 60.0
    _report(
        5, ok,
        f"attractor slope {fit.slope:.3f} (required [1.1, 1.3]; measured set has "
        f"dimension ~1.46 so this clause fails by construction), "
        f"square {square_fit.slope:.3f} (2.0 +- 0.05), "
        f"segment {segment_fit.slope:.3f} (1.0 +- 0.05); {elapsed:.1f}s (< 60s)",
    )
    assert ok


def test_criterion_06_bifurcation_structure():
    spec = SweepSpec(
        axis="omega",
        bounds=(0.2, 0.95),
        resolution=76,
        fixed=STD1,
        transient=1500,
        record=400,
        initials_per_point=3,
        rng_seed=77,
    )
    records = run_sweep(spec)
    high = [r for r in records if r.param_value >= 0.7]
    fixed_ok = bool(high) and all(r.classification == "fixed-point" for r in high)
    p1 = [r.param_value for r in records if r.classification == "fixed-point"]
    p2 = [r.param_value for r in records if r.classification == "period-2"]
    p4 = [r.param_value for r in records if r.classification == "period-4"]
    doubling_ok = (
        bool(p1) and bool(p2) and bool(p4)
        and max(p4) < min(p2) and max(p2) < min(p1)
    )
    chaotic = [
        r for r in records
        if r.classification == "aperiodic" and r.param_value < 0.45
    ]
    chaos_ok = len(chaotic) >= 5 and all(r.lyapunov_top > 1e-3 for r in chaotic)

    pi_spec = SweepSpec(
        axis="pi1",
        bounds=(0.0, 1.0),
        resolution=5,
        fixed=STD2,
        transient=3000,
        record=400,
        initials_per_point=3,
        rng_seed=5,
    )
    pi_records = run_sweep(pi_spec)
    left = forcing_response_classification(0.5, 0.3, STD1, transient=4000)
    right = forcing_response_classification(0.3, 0.5, STD1, transient=4000)
    endpoint_ok = (
        pi_records[0].classification == left.forcing_class
        and right.forcing_period.period is not None
        and pi_records[-1].classification == f"period-{right.forcing_period.period}"
        and pi_records[0].classification != pi_records[-1].classification
    )
    ok = fixed_ok and doubling_ok and chaos_ok and endpoint_ok
    _report(
        6, ok,
        f"memory sweep: fixed-point band (omega >= 0.7) {fixed_ok}, "
        f"doubling chain 1<-2<-4 ordered {doubling_ok}, "
        f"{len(chaotic)} positive-exponent points below 0.45 {chaos_ok}; "
        f"weight sweep endpoints {pi_records[0].classification} -> "
        f"{pi_records[-1].classification} consistent with driven-system classes "
        f"{endpoint_ok}",
    )
    assert ok


def test_criterion_07_common_fixed_point():
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 6))
        omegas = tuple(float(v) for v in rng.uniform(0, 1, n))
        raw = rng.uniform(0.05, 1.0, n)
        pis = tuple(float(v) for v in raw / raw.sum())
        p = ModelParams(omegas=omegas, pis=pis)
        lam_star = common_fixed_point(p)
        new = advance([lam_star] * n, p)
        worst = max(worst, max(abs(v - lam_star) for v in new))
    ok = worst < 1e-10
    _report(7, ok, f"100 random configurations: worst residual {worst:.2e} < 1e-10")
    assert ok


def test_criterion_08_derivative_consistency():
    rng = np.random.default_rng(123)
    h = 1e-6
    worst = 0.0
    checked = 0
    while checked < 1000:
        n = int(rng.integers(1, 4))
        omegas = tuple(float(v) for v in rng.uniform(0, 1, n))
        raw = rng.uniform(0.05, 1.0, n)
        pis = tuple(float(v) for v in raw / raw.sum())
        p = ModelParams(omegas=omegas, pis=pis)
        lams = [float(v) for v in rng.uniform(1.0, 95.0, n)]
        if sum(pi * lam for pi, lam in zip(pis, lams)) > p.lambda_max - 1.0:
            continue
        jac = coupled_jacobian(lams, p)
        for j in range(n):
            up = list(lams)
            dn = list(lams)
            up[j] += h
            dn[j] -= h
            fd = (np.array(advance(up, p)) - np.array(advance(dn, p))) / (2 * h)
            for i in range(n):
                scale = max(abs(fd[i]), 1e-3)
                worst = max(worst, abs(jac[i, j] - fd[i]) / scale)
        checked += 1
    ok = worst < 1e-5
    _report(
        8, ok,
        f"1000 random feasible states: worst relative Jacobian deviation "
        f"{worst:.2e} < 1e-5",
    )
    assert ok


def test_criterion_09_microstructure_convergence():
    omega, lam0, horizon, replicas = 0.8, 70.0, 50, 20
    base = ModelParams(omegas=(omega,), pis=(1.0,))
    rms_by_n = []
    for n in (100, 1000, 10_000):
        vals = []
        for rep in range(replicas):
            mp = MicroParams(
                base=base, n_intraday=n, horizon=horizon,
                rng_seed=rep * 1_000_003 + n,
            )
            run = run_micro(mp, [lam0])
            vals.append(
                float(
                    np.sqrt(
                        np.mean(
                            (run.lambdas_stochastic - run.lambdas_deterministic) ** 2
                        )
                    )
                )
            )
        rms_by_n.append(float(np.mean(vals)))
    slope = float(
        np.polyfit(np.log([100, 1000, 10_000]), np.log(rms_by_n), 1)[0]
    )
    slope_ok = abs(slope + 0.5) <= 0.15

    mp0 = MicroParams(
        base=ModelParams(omegas=(0.9, 0.8), pis=(0.3, 0.7)),
        n_intraday=100, horizon=100, zero_noise=True,
    )
    zero_run = run_micro(mp0, [40.0, 70.0])
    zero_gap = float(
        np.max(np.abs(zero_run.lambdas_stochastic - zero_run.lambdas_deterministic))
    )
    zero_ok = zero_gap < 1e-10
    ok = slope_ok and zero_ok
    _report(
        9, ok,
        f"RMS {[f'{v:.3f}' for v in rms_by_n]} over n in (1e2, 1e3, 1e4): "
        f"log-log slope {slope:.3f} within -0.5 +- 0.15; "
        f"zero-noise gap {zero_gap:.2e} < 1e-10 over 100 periods",
    )
    assert ok


def test_criterion_10_reproducibility(tmp_path: Path):
    def strip(path: Path) -> list[str]:
        return [
            line
            for line in path.read_text().splitlines()
            if not line.startswith("# timestamp:")
        ]

    configs = {
        "simulate": {
            "model": {"omegas": [0.5, 0.3], "pis": [0.5, 0.5]},
            "run": {"transient": 0, "record": 200, "seed": 31},
        },
        "bifurcate": {
            "model": {"omegas": [0.5]},
            "run": {"seed": 3, "transient": 800, "record": 210},
            "sweep": {"axis": "omega", "range": [0.3, 0.9], "resolution": 7},
        },
        "micro": {
            "model": {"omegas": [0.8]},
            "run": {"seed": 5, "initial": [70.0]},
            "micro": {"n_intraday": 300, "horizon": 12},
        },
        "fixedpoint": {
            "model": {"omegas": [0.5, 0.3], "pis": [0.5, 0.5]},
            "skew": {
                "omega1": 0.7,
                "history": {"kind": "constant", "level": 75.0, "depth": 300},
            },
        },
    }
    ok = True
    for command, document in configs.items():
        cfg = tmp_path / f"{command}.json"
        cfg.write_text(json.dumps(document))
        a = tmp_path / f"{command}_a.out"
        b = tmp_path / f"{command}_b.out"
        code_a = main([command, "--config", str(cfg), "--out", str(a)])
        code_b = main([command, "--config", str(cfg), "--out", str(b)])
        ok = ok and code_a == code_b == 0 and strip(a) == strip(b)
    _report(
        10, ok,
        "simulate, bifurcate, micro and fixedpoint reruns byte-identical "
        "(timestamp header excluded)",
    )
    assert ok
