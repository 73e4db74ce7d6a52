"""Command-line experiment drivers.

``chlab <command> --config <file> [--out <dir>] [--strict] [--seed <u64>]``

Commands: ``run`` (time integration with diagnostics), ``steady``
(relaxation to a stationary state), ``dispersion`` (single-mode rate
measurement against the analytic 2x2 system), ``continuation``
(regularized-potential sweep against the exact-log reference),
``compare`` (two perturbed trajectories and their dual-norm distance), and
``barrier`` (separation envelopes from the measured forcing).

Every command writes deterministic artifacts into the output directory —
a diagnostics or table CSV with the resolved config embedded in ``#``
header lines, ``CHSNAP1`` snapshots where fields are involved, and a
``summary.json``.  Exit codes: 0 success, 2 configuration error, 3 solver
failure, 4 strict-mode check failure, 130 interrupted (partial outputs
carry a truncation marker).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import RunConfig, initial_state, load_config, _smooth_noise
from .diagnostics import (
    dual_distance,
    record_for,
    barrier_check,
    trace_from_records,
)
from .dynamics import Stepper, measured_dispersion_rate
from .errors import (
    BarrierBreach,
    CheckFailed,
    ChlabError,
    CorruptSnapshot,
    EpsZero,
    GridMismatch,
    KappaZero,
    NewtonDiverged,
    NoConvergence,
    OutOfDomain,
    ParseError,
    ValidationError,
)
from .io import (
    CSVWriter,
    config_header_lines,
    format_value,
    record_to_dict,
    write_snapshot,
    write_summary,
)
from .steady import relax_to_steady

_CONFIG_ERRORS = (ParseError, ValidationError)
_SOLVER_ERRORS = (
    BarrierBreach,
    CorruptSnapshot,
    EpsZero,
    GridMismatch,
    KappaZero,
    NewtonDiverged,
    NoConvergence,
    OutOfDomain,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chlab",
        description="numerical laboratory for viscous phase separation with chemotaxis",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("run", "integrate the coupled system and record diagnostics"),
        ("steady", "relax to a stationary state and report residuals"),
        ("dispersion", "measure single-mode rates against the analytic system"),
        ("continuation", "sweep the potential regularization against the exact scheme"),
        ("compare", "evolve two perturbed initial data and log their distance"),
        ("barrier", "integrate separation envelopes from the measured forcing"),
    ):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", required=True, help="experiment file (INI-style)")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--strict", action="store_true", help="turn soft checks into failures")
        p.add_argument("--seed", type=int, default=None, help="seed override (u64)")
    return parser


def _emit_error(exc: BaseException, code: int) -> int:
    payload = {
        "error": type(exc).__name__,
        "message": str(exc),
        "exit_code": code,
    }
    if isinstance(exc, ValidationError):
        payload["violations"] = exc.violations
    print(json.dumps(payload, sort_keys=True))
    return code


def _prepare(cfg: RunConfig, command: str) -> Path:
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    for note in cfg.warnings:
        print(f"warning: {note}", file=sys.stderr)
    return out


def _n_steps(cfg: RunConfig, t0: float) -> int:
    return max(0, math.ceil((cfg.t_end - t0) / cfg.solver.dt - 1e-9))


def _table_writer(path: Path, cfg: RunConfig, command: str, columns: tuple[str, ...]):
    fh = open(path, "w", encoding="utf-8", newline="\n")
    for line in config_header_lines(cfg.resolved, command):
        fh.write(line + "\n")
    fh.write(",".join(columns) + "\n")
    return fh


# ----------------------------------------------------------------------
# run
# ----------------------------------------------------------------------


def cmd_run(cfg: RunConfig, strict: bool) -> int:
    out = _prepare(cfg, "run")
    started = time.perf_counter()
    state = initial_state(cfg)
    stepper = Stepper(cfg.grid, cfg.model, cfg.solver)
    total = _n_steps(cfg, state.t)
    interrupted = False
    done = 0
    with CSVWriter(out / "diagnostics.csv", config_header_lines(cfg.resolved, "run")) as csv:
        last = record_for(None, state, cfg.model, cfg.solver)
        csv.write(last)
        try:
            for k in range(1, total + 1):
                prev = state
                state = stepper.step(state)
                done = k
                if k % cfg.output.csv_every == 0 or k == total:
                    last = record_for(
                        prev, state, cfg.model, cfg.solver, stepper.last_info.newton_iters
                    )
                    csv.write(last)
                if cfg.output.snapshot_every and k % cfg.output.snapshot_every == 0:
                    write_snapshot(out / f"state_{k:08d}.chsnap", state)
        except KeyboardInterrupt:
            interrupted = True
        csv.close(truncated=interrupted)
    write_snapshot(out / "final.chsnap", state)
    write_summary(
        out / "summary.json",
        {
            "command": "run",
            "config": dict(cfg.resolved),
            "steps": done,
            "planned_steps": total,
            "interrupted": interrupted,
            "final": record_to_dict(last),
            "wall_time": time.perf_counter() - started,
        },
    )
    return 130 if interrupted else 0


# ----------------------------------------------------------------------
# steady
# ----------------------------------------------------------------------


def cmd_steady(cfg: RunConfig, strict: bool) -> int:
    out = _prepare(cfg, "steady")
    started = time.perf_counter()
    state0 = initial_state(cfg)
    interrupted = False
    counter = {"k": 0}
    with CSVWriter(out / "diagnostics.csv", config_header_lines(cfg.resolved, "steady")) as csv:
        csv.write(record_for(None, state0, cfg.model, cfg.solver))

        def observer(prev, new, info):
            counter["k"] += 1
            if counter["k"] % cfg.output.csv_every == 0:
                csv.write(record_for(prev, new, cfg.model, cfg.solver, info.newton_iters))

        try:
            state, report = relax_to_steady(
                state0, cfg.model, cfg.solver, t_max=cfg.t_end, observer=observer
            )
        except KeyboardInterrupt:
            interrupted = True
            state, report = state0, None
        csv.close(truncated=interrupted)
    if interrupted:
        write_summary(
            out / "summary.json",
            {
                "command": "steady",
                "config": dict(cfg.resolved),
                "interrupted": True,
                "wall_time": time.perf_counter() - started,
            },
        )
        return 130
    write_snapshot(out / "final.chsnap", state)
    write_summary(
        out / "summary.json",
        {
            "command": "steady",
            "config": dict(cfg.resolved),
            "steps": counter["k"],
            "interrupted": False,
            "steady": {
                "residual_phi": report.residual_phi,
                "residual_sigma": report.residual_sigma,
                "mean_phi_err": report.mean_phi_err,
                "mean_sigma_err": report.mean_sigma_err,
                "delta_inf": report.delta_inf,
                "converged": report.converged,
                "wall_time": report.wall_time,
            },
            "final": record_to_dict(record_for(None, state, cfg.model, cfg.solver)),
            "wall_time": time.perf_counter() - started,
        },
    )
    if strict and not report.converged:
        raise CheckFailed(
            f"relaxation did not converge by t={cfg.t_end}: residual_phi="
            f"{report.residual_phi:.3e}, residual_sigma={report.residual_sigma:.3e}"
        )
    return 0


# ----------------------------------------------------------------------
# dispersion
# ----------------------------------------------------------------------


def cmd_dispersion(cfg: RunConfig, strict: bool) -> int:
    out = _prepare(cfg, "dispersion")
    started = time.perf_counter()
    g = cfg.grid
    steps = cfg.dispersion.steps or max(1, round(cfg.t_end / cfg.solver.dt))
    columns = ("mode", "q", "branch", "predicted", "measured", "rel_err")
    rows = []
    worst = 0.0
    fh = _table_writer(out / "dispersion.csv", cfg, "dispersion", columns)
    try:
        for k in cfg.dispersion.modes:
            mode = (k,) + (0,) * (g.ndim - 1)
            for branch in cfg.dispersion.branches:
                measured, predicted = measured_dispersion_rate(
                    g,
                    cfg.model,
                    cfg.solver,
                    mode,
                    branch=branch,
                    amplitude=cfg.dispersion.amplitude,
                    n_steps=steps,
                    sigma_mean=cfg.init.sigma_mean,
                )
                rel = abs(measured - predicted) / max(abs(predicted), 1e-12)
                worst = max(worst, rel)
                row = {
                    "mode": k,
                    "q": _axis0_eigenvalue(g, k),
                    "branch": branch,
                    "predicted": predicted,
                    "measured": measured,
                    "rel_err": rel,
                }
                rows.append(row)
                fh.write(",".join(format_value(row[c]) for c in columns) + "\n")
    finally:
        fh.close()
    write_summary(
        out / "summary.json",
        {
            "command": "dispersion",
            "config": dict(cfg.resolved),
            "rows": rows,
            "max_rel_err": worst,
            "steps_per_mode": steps,
            "wall_time": time.perf_counter() - started,
        },
    )
    if strict and worst > 0.02:
        raise CheckFailed(f"dispersion mismatch: max relative error {worst:.3%} > 2%")
    return 0


def _axis0_eigenvalue(g, k: int) -> float:
    n = g.n_per_axis[0]
    h = g.h_per_axis[0]
    return (2.0 - 2.0 * math.cos(math.pi * k / (n - 1))) / h**2


# ----------------------------------------------------------------------
# continuation
# ----------------------------------------------------------------------


def cmd_continuation(cfg: RunConfig, strict: bool) -> int:
    if not cfg.solver.kappa_schedule:
        raise ValidationError(
            ["time.kappa_schedule: required for the continuation command"]
        )
    out = _prepare(cfg, "continuation")
    started = time.perf_counter()
    g = cfg.grid
    state0 = initial_state(cfg)
    exact_cfg = replace(cfg.solver, scheme="exact-log")
    exact_mp = replace(cfg.model, potential=replace(cfg.model.potential, kappa=0.0))
    ref = Stepper(g, exact_mp, exact_cfg).run(state0, cfg.t_end)

    columns = ("kappa", "error", "ratio_to_first")
    errors = []
    fh = _table_writer(out / "continuation.csv", cfg, "continuation", columns)
    try:
        for kappa in cfg.solver.kappa_schedule:
            mp_k = replace(cfg.model, potential=replace(cfg.model.potential, kappa=kappa))
            cfg_k = replace(cfg.solver, scheme="regularized")
            end = Stepper(g, mp_k, cfg_k).run(state0, cfg.t_end)
            err = g.l2_norm(end.phi - ref.phi)
            errors.append(err)
            ratio = err / errors[0] if errors[0] > 0.0 else math.nan
            fh.write(
                ",".join(format_value(v) for v in (kappa, err, ratio)) + "\n"
            )
    finally:
        fh.close()
    monotone = all(b < a for a, b in zip(errors, errors[1:]))
    final_over_first = errors[-1] / errors[0] if errors[0] > 0.0 else math.nan
    write_summary(
        out / "summary.json",
        {
            "command": "continuation",
            "config": dict(cfg.resolved),
            "kappa_schedule": list(cfg.solver.kappa_schedule),
            "errors": errors,
            "monotone_decreasing": monotone,
            "final_over_first": final_over_first,
            "wall_time": time.perf_counter() - started,
        },
    )
    if strict and not (monotone and final_over_first <= 0.5):
        raise CheckFailed(
            "continuation errors did not contract: "
            f"monotone={monotone}, final/first={final_over_first:.3f}"
        )
    return 0


# ----------------------------------------------------------------------
# compare
# ----------------------------------------------------------------------


def cmd_compare(cfg: RunConfig, strict: bool) -> int:
    out = _prepare(cfg, "compare")
    started = time.perf_counter()
    g = cfg.grid
    base = initial_state(cfg)
    amp = cfg.compare.perturb_amp
    shape_phi = _smooth_noise(g, cfg.compare.perturb_seed, cfg.init.smooth_modes, stream=2)
    shape_sig = _smooth_noise(g, cfg.compare.perturb_seed, cfg.init.smooth_modes, stream=3)
    shape_phi = shape_phi - g.mean(shape_phi)
    shape_sig = shape_sig - g.mean(shape_sig)
    from .dynamics import State

    pert = State(
        grid=g,
        phi=base.phi + amp * shape_phi,
        sigma=base.sigma + amp * shape_sig,
        t=base.t,
    )
    stepper_a = Stepper(g, cfg.model, cfg.solver)
    stepper_b = Stepper(g, cfg.model, cfg.solver)
    total = _n_steps(cfg, base.t)
    columns = ("t", "d_total", "d_phi_dual", "d_phi_l2", "d_sigma_dual")
    fh = _table_writer(out / "distances.csv", cfg, "compare", columns)
    interrupted = False

    def write_row(a, b):
        d_phi = g.dual_norm_H1p(a.phi - b.phi)
        d_phi_l2 = g.l2_norm(a.phi - b.phi)
        d_sig = g.dual_norm_H1p(a.sigma - b.sigma)
        d_tot = dual_distance(a, b, cfg.model)
        fh.write(
            ",".join(format_value(v) for v in (a.t, d_tot, d_phi, d_phi_l2, d_sig)) + "\n"
        )
        return d_tot

    try:
        d0 = write_row(base, pert)
        d_last = d0
        a, b = base, pert
        try:
            for k in range(1, total + 1):
                a = stepper_a.step(a)
                b = stepper_b.step(b)
                if k % cfg.output.csv_every == 0 or k == total:
                    d_last = write_row(a, b)
        except KeyboardInterrupt:
            interrupted = True
            fh.write("# truncated\n")
    finally:
        fh.close()
    amplification = d_last / d0 if d0 > 0.0 else None
    write_summary(
        out / "summary.json",
        {
            "command": "compare",
            "config": dict(cfg.resolved),
            "perturb_amp": amp,
            "d_initial": d0,
            "d_final": d_last,
            "amplification": amplification,
            "interrupted": interrupted,
            "wall_time": time.perf_counter() - started,
        },
    )
    if interrupted:
        return 130
    if strict and not math.isfinite(d_last):
        raise CheckFailed("trajectory distance became non-finite")
    return 0


# ----------------------------------------------------------------------
# barrier
# ----------------------------------------------------------------------


def cmd_barrier(cfg: RunConfig, strict: bool) -> int:
    problems = []
    if cfg.solver.scheme != "exact-log":
        problems.append("time.scheme: the barrier command requires the exact-log scheme")
    if cfg.model.eps <= 0.0:
        problems.append("H2: the barrier command requires eps > 0")
    if problems:
        raise ValidationError(problems)
    out = _prepare(cfg, "barrier")
    started = time.perf_counter()
    state = initial_state(cfg)
    stepper = Stepper(cfg.grid, cfg.model, cfg.solver)
    total = _n_steps(cfg, state.t)
    records = [record_for(None, state, cfg.model, cfg.solver)]
    interrupted = False
    try:
        for k in range(1, total + 1):
            prev = state
            state = stepper.step(state)
            if k % cfg.output.csv_every == 0 or k == total:
                records.append(
                    record_for(prev, state, cfg.model, cfg.solver, stepper.last_info.newton_iters)
                )
    except KeyboardInterrupt:
        interrupted = True
    trace = trace_from_records(records)
    result = barrier_check(trace, cfg.model)
    columns = ("t", "lower", "upper", "min_phi", "max_phi")
    with open(out / "barrier.csv", "w", encoding="utf-8", newline="\n") as fh:
        for line in config_header_lines(cfg.resolved, "barrier"):
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for i in range(len(records)):
            fh.write(
                ",".join(
                    format_value(v)
                    for v in (
                        trace.times[i],
                        result.lower[i],
                        result.upper[i],
                        trace.min_phi[i],
                        trace.max_phi[i],
                    )
                )
                + "\n"
            )
        if interrupted:
            fh.write("# truncated\n")
    write_snapshot(out / "final.chsnap", state)
    write_summary(
        out / "summary.json",
        {
            "command": "barrier",
            "config": dict(cfg.resolved),
            "c_h": result.c_h,
            "y_star": result.y_star,
            "delta_min": result.delta_min,
            "holds": result.holds,
            "interrupted": interrupted,
            "final": record_to_dict(records[-1]),
            "wall_time": time.perf_counter() - started,
        },
    )
    if interrupted:
        return 130
    if strict and not result.holds:
        raise CheckFailed(
            f"sandwich violated: trajectory left the envelopes (c_h={result.c_h:.4f})"
        )
    return 0


# ----------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------

_COMMANDS = {
    "run": cmd_run,
    "steady": cmd_steady,
    "dispersion": cmd_dispersion,
    "continuation": cmd_continuation,
    "compare": cmd_compare,
    "barrier": cmd_barrier,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed, directory=args.out)
        return _COMMANDS[args.command](cfg, args.strict)
    except _CONFIG_ERRORS as exc:
        return _emit_error(exc, 2)
    except _SOLVER_ERRORS as exc:
        return _emit_error(exc, 3)
    except CheckFailed as exc:
        return _emit_error(exc, 4)
    except ChlabError as exc:
        return _emit_error(exc, 3)
    except KeyboardInterrupt:
        print(json.dumps({"error": "Interrupted", "exit_code": 130}, sort_keys=True))
        return 130


if __name__ == "__main__":
    sys.exit(main(argv=sys.argv[1:]))
