"""Command-line front end.

Subcommands: simulate, bifurcate, lyapunov, attractor, boxdim,
fixedpoint, micro, stability-map.  Every command takes --config PATH
(JSON), optional --out PATH (stdout otherwise), --workers N for grid
commands and --preset for bundled experiment protocols.  Logging level
comes from LEVDYN_LOG (error, info, debug).

Exit codes: 0 success, 1 runtime failure, 2 configuration error,
3 constraint-violation-dominated run.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from contextlib import contextmanager
from typing import Any, Iterator, TextIO

import numpy as np

from . import __version__
from .attractor import box_dimension, capture_cloud
from .config import (
    ExperimentConfig,
    ConfigError,
    load_config,
    merge_preset,
    parse_config,
)
from .errors import (
    InsolvencyError,
    LevdynError,
    NonstationaryError,
    OrbitViolationError,
)
from .lyap import lyapunov_1d, lyapunov_spectrum
from .micro import MicroParams, run_micro
from .orbits import iterate, pair_sync
from .params import LeverageState
from .skew import constant_history, history_from_orbit, random_fixed_point
from .sweep import SweepSpec, run_sweep, stability_map
from .output import write_csv, write_json

log = logging.getLogger("levdyn")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_VIOLATION = 3

#: bundled experiment protocols (merged under the user config)
PRESETS: dict[str, dict[str, Any]] = {
    "fig2": {
        "model": {"omegas": [0.5]},
        "run": {"transient": 1000, "record": 800},
        "sweep": {"axis": "omega", "range": [0.0, 1.0], "resolution": 800},
    },
    "fig5": {
        "model": {"omegas": [0.5, 0.3], "pis": [0.5, 0.5]},
        "run": {"transient": 1000, "record": 500},
        "sweep": {"axis": "pi1", "range": [0.0, 1.0], "resolution": 500},
    },
    "fig6": {
        "model": {"omegas": [0.5, 0.4], "pis": [0.5, 0.5]},
        "run": {"transient": 1000, "record": 800},
        "sweep": {"axis": "omega1", "range": [0.0, 1.0], "resolution": 800},
    },
    "fig7": {
        "model": {"omegas": [0.5, 0.3], "pis": [0.5, 0.5]},
        "run": {"transient": 1000},
        "attractor": {"n_points": 1_000_000},
    },
}


def _setup_logging() -> None:
    level = os.environ.get("LEVDYN_LOG", "error").lower()
    numeric = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(
        level=numeric.get(level, logging.ERROR),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


@contextmanager
def _open_out(path: str | None) -> Iterator[TextIO]:
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def _load(args: argparse.Namespace) -> ExperimentConfig:
    if args.preset is None:
        return load_config(args.config)
    try:
        with open(args.config, encoding="utf-8") as fh:
            document = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    merged = merge_preset(document, PRESETS[args.preset])
    return parse_config(merged)


def _initial_state(
    config: ExperimentConfig, command: str
) -> tuple[LeverageState, int | None]:
    """Initial leverages from run.initial, else a seeded draw in the box."""
    params = config.model
    if config.run.initial is not None:
        return LeverageState.from_lambdas(config.run.initial, params), config.run.seed
    seed = config.require_seed(command)
    rng = np.random.default_rng(seed)
    draw = rng.uniform(1.0, params.lambda_max, params.n_banks)
    return LeverageState.from_lambdas(draw, params), seed


def cmd_simulate(config: ExperimentConfig, out: TextIO) -> int:
    state, seed = _initial_state(config, "simulate")
    trace = iterate(
        state, config.model, transient=config.run.transient, record=config.run.record
    )
    n = config.model.n_banks
    columns = ["t", *(f"lambda_{i + 1}" for i in range(n)), "sync_12", "feasible"]
    rows = []
    t0 = config.run.transient
    for k in range(trace.n_recorded):
        lams = trace.recorded[k]
        sync = pair_sync(lams[0], lams[1]) if n >= 2 else 0.0
        rows.append([t0 + k + 1, *(float(v) for v in lams), sync, True])
    write_csv(out, columns, rows, config.sha256, seed)
    if trace.violation is not None:
        step, constraint = trace.violation
        log.error("orbit violated %s at step %d", constraint, step)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_bifurcate(config: ExperimentConfig, out: TextIO, workers: int) -> int:
    if config.sweep is None:
        raise ConfigError("bifurcate needs a sweep block", key="sweep")
    seed = config.require_seed("bifurcate")
    try:
        spec = SweepSpec(
            axis=config.sweep.axis,
            bounds=config.sweep.bounds,
            resolution=config.sweep.resolution,
            fixed=config.model,
            transient=config.run.transient,
            record=config.run.record,
            initials_per_point=config.sweep.initials_per_point,
            rng_seed=seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc), key="sweep") from None
    records = run_sweep(spec, workers=workers)
    columns = [
        "param_value", "branch", "step", "bank", "lambda",
        "lyapunov_top", "period", "survival_fraction", "classification",
    ]
    rows = []
    for rec in records:
        lyap = "" if rec.lyapunov_top is None else rec.lyapunov_top
        period = "" if rec.period is None else rec.period.label
        for r in range(rec.samples.shape[0]):
            for bank in range(rec.samples.shape[1]):
                rows.append([
                    rec.param_value, int(rec.branch[r]), r, bank + 1,
                    float(rec.samples[r, bank]), lyap, period,
                    rec.survival_fraction, rec.classification,
                ])
        if rec.samples.shape[0] == 0:
            rows.append([
                rec.param_value, -1, -1, 0, "", lyap, period,
                rec.survival_fraction, rec.classification,
            ])
    write_csv(out, columns, rows, config.sha256, seed)
    infeasible = sum(1 for rec in records if rec.classification == "infeasible")
    if infeasible > len(records) / 2:
        log.error("%d of %d grid points fully violated", infeasible, len(records))
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_lyapunov(config: ExperimentConfig, out: TextIO) -> int:
    block = config.lyapunov
    steps = block.steps if block is not None else 100_000
    params = config.model
    if params.n_banks == 1:
        if block is not None and block.x0 is not None:
            x0, seed = block.x0, config.run.seed
        else:
            state, seed = _initial_state(config, "lyapunov")
            x0 = state.lambdas[0]
        est = lyapunov_1d(
            params.omegas[0], params, x0=x0,
            transient=config.run.transient, steps=steps,
        )
    else:
        state, seed = _initial_state(config, "lyapunov")
        est = lyapunov_spectrum(
            state, params, transient=config.run.transient, steps=steps
        )
    write_json(
        out,
        {
            "exponents": list(est.exponents),
            "steps_used": est.steps_used,
            "transient": est.transient,
            "saturated": est.saturated,
        },
        config.sha256,
        seed,
    )
    return EXIT_OK


def cmd_attractor(config: ExperimentConfig, out: TextIO) -> int:
    n_points = config.attractor.n_points if config.attractor else 1_000_000
    state, seed = _initial_state(config, "attractor")
    cloud = capture_cloud(state, config.model, config.run.transient, n_points)
    columns = ["lambda1", "lambda2"]
    rows = ((float(p[0]), float(p[1])) for p in cloud.points)
    write_csv(out, columns, rows, config.sha256, seed)
    return EXIT_OK


def cmd_boxdim(config: ExperimentConfig, out: TextIO) -> int:
    n_points = config.attractor.n_points if config.attractor else 1_000_000
    block = config.boxdim
    state, seed = _initial_state(config, "boxdim")
    cloud = capture_cloud(state, config.model, config.run.transient, n_points)
    fit = box_dimension(
        cloud,
        eps_decades=block.eps_decades if block else 3.0,
        n_scales=block.n_scales if block else 12,
        fit_range=block.fit_range if block else None,
    )
    write_json(
        out,
        {
            "slope": fit.slope,
            "stderr": fit.stderr,
            "fit_range": list(fit.fit_range),
            "epsilons": [float(e) for e in fit.epsilons],
            "counts": [int(c) for c in fit.counts],
            "n_points": cloud.count,
        },
        config.sha256,
        seed,
    )
    return EXIT_OK


def cmd_fixedpoint(config: ExperimentConfig, out: TextIO) -> int:
    if config.skew is None or config.skew.history is None:
        raise ConfigError("fixedpoint needs a skew block with a history", key="skew")
    spec = config.skew.history
    if spec.kind == "constant":
        history = constant_history(spec.level, spec.depth)
    else:
        history, _ = history_from_orbit(
            spec.omega2, config.model, depth=spec.depth,
            transient=spec.transient, x0=spec.x0,
        )
    rfp = random_fixed_point(
        history, config.skew.omega1, config.model, tol=config.skew.tol
    )
    write_json(
        out,
        {
            "value": rfp.value,
            "truncation_depth": rfp.truncation_depth,
            "tail_bound": rfp.tail_bound,
            "history_source": history.source,
        },
        config.sha256,
        config.run.seed,
    )
    return EXIT_OK


def cmd_micro(config: ExperimentConfig, out: TextIO) -> int:
    if config.micro is None:
        raise ConfigError("micro needs a micro block", key="micro")
    seed = config.require_seed("micro")
    try:
        mp = MicroParams(
            base=config.model,
            n_intraday=config.micro.n_intraday,
            horizon=config.micro.horizon,
            rng_seed=seed,
            equity_total=config.micro.equity_total,
            zero_noise=config.micro.zero_noise,
        )
    except ValueError as exc:
        raise ConfigError(str(exc), key="micro") from None
    if config.run.initial is not None:
        initial = list(config.run.initial)
    else:
        rng = np.random.default_rng(seed)
        initial = list(rng.uniform(1.0, config.model.lambda_max, config.model.n_banks))
    run = run_micro(mp, initial)
    columns = [
        "period", "bank", "lambda_stochastic", "lambda_deterministic",
        "pi_drift_max", "phi_hat", "sigma_hat_sq",
    ]
    rows = []
    for t in range(mp.horizon):
        for bank in range(config.model.n_banks):
            rows.append([
                t, bank + 1,
                float(run.lambdas_stochastic[t, bank]),
                float(run.lambdas_deterministic[t, bank]),
                float(run.pi_drift_max[t]),
                float(run.phi_hat[t]),
                float(run.sigma_eps_hat_sq[t]),
            ])
    write_csv(out, columns, rows, config.sha256, seed)
    return EXIT_OK


def cmd_stability_map(config: ExperimentConfig, out: TextIO, workers: int) -> int:
    if config.stability is None:
        raise ConfigError("stability-map needs a stability block", key="stability")
    seed = config.require_seed("stability-map")
    block = config.stability
    omega1s = np.linspace(*block.omega1_range, block.resolution[0])
    omega2s = np.linspace(*block.omega2_range, block.resolution[1])
    result = stability_map(
        omega1s, omega2s, block.pi1, config.model,
        transient=config.run.transient, record=config.run.record,
        initials_per_point=block.initials_per_point,
        rng_seed=seed, workers=workers,
    )
    columns = ["omega1", "omega2", "classification"]
    rows = []
    for i, w1 in enumerate(result.omega1s):
        for j, w2 in enumerate(result.omega2s):
            rows.append([float(w1), float(w2), result.classes[i, j]])
    write_csv(out, columns, rows, config.sha256, seed)
    flat = [c for row in result.classes for c in row]
    if sum(1 for c in flat if c == "infeasible") > len(flat) / 2:
        return EXIT_VIOLATION
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levdyn",
        description="Leverage dynamics toolkit: simulation, sweeps and analysis",
    )
    parser.add_argument("--version", action="version", version=f"levdyn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "simulate": "iterate the coupled map and emit the orbit as CSV",
        "bifurcate": "run a parameter sweep and emit asymptotic samples as CSV",
        "lyapunov": "estimate Lyapunov exponents, JSON report",
        "attractor": "capture a long-run point cloud as CSV",
        "boxdim": "capture a cloud and fit its box-counting dimension, JSON report",
        "fixedpoint": "evaluate the forced bank's random fixed point, JSON report",
        "micro": "run the intraday market simulator, diagnostics CSV",
        "stability-map": "classify dynamics over an (omega1, omega2) grid, CSV",
    }
    for name, help_text in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON experiment configuration")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument(
            "--workers",
            type=int,
            default=os.cpu_count() or 1,
            help="parallel workers for grid commands",
        )
        p.add_argument(
            "--preset",
            choices=sorted(PRESETS),
            default=None,
            help="named experiment preset merged under the config",
        )
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        config = _load(args)
        with _open_out(args.out) as out:
            if args.command == "simulate":
                return cmd_simulate(config, out)
            if args.command == "bifurcate":
                return cmd_bifurcate(config, out, args.workers)
            if args.command == "lyapunov":
                return cmd_lyapunov(config, out)
            if args.command == "attractor":
                return cmd_attractor(config, out)
            if args.command == "boxdim":
                return cmd_boxdim(config, out)
            if args.command == "fixedpoint":
                return cmd_fixedpoint(config, out)
            if args.command == "micro":
                return cmd_micro(config, out)
            if args.command == "stability-map":
                return cmd_stability_map(config, out, args.workers)
            raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        print(f"levdyn: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OrbitViolationError, InsolvencyError, NonstationaryError) as exc:
        log.error("constraint violation: %s", exc)
        print(f"levdyn: constraint violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except LevdynError as exc:
        log.error("runtime error: %s", exc)
        print(f"levdyn: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, TypeError) as exc:
        log.error("runtime error: %s", exc)
        print(f"levdyn: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
