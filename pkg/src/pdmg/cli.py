"""Batch command line front end.

Subcommands: validate, solve, evaluate, best-response, simulate, verify,
ladder, game (debug matrix solve), oracle.  Every run writes one manifest
next to its artifacts.  Exit codes: 0 success, 1 validation/check failure,
2 I/O or parse error.  The output directory may be overridden with the
PDMG_OUT environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .approx import ladder_run, shift_identity_check
from .matrix_game import MatrixGame, MatrixGameError, solve as solve_game
from .model import GameModel, ModelFormatError, ModelValidationError, load_model
from .shapley import (
    FMT,
    SolverConfig,
    SolverError,
    backward_solve,
    best_response_solve,
    export_solution_csv,
    import_solution_csv,
    picard_solve,
    policy_evaluate,
    saddle_from_field,
    to_risk_value,
)
from .simulate import SimConfig, estimate_J, simulate_path, _path_rng
from .verify import check_assumptions, check_bounds, exploitability, oracle_fine_grid

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_IO = 2


def _fnum(v):
    return float(FMT % float(v))


def _out_dir(args) -> str:
    out = os.environ.get("PDMG_OUT", None)
    if getattr(args, "out", None):
        out = args.out
    if not out:
        out = "."
    os.makedirs(out, exist_ok=True)
    return out


def _read_model(path: str) -> GameModel:
    with open(path) as fh:
        return load_model(fh.read())


def _write(path: str, text: str) -> str:
    with open(path, "w") as fh:
        fh.write(text)
    return path


def _manifest(out: str, command: str, args, artifacts: list, wall: float, extra=None) -> str:
    doc = {
        "command": command,
        "model": getattr(args, "model", None),
        "config": {
            k: v
            for k, v in sorted(vars(args).items())
            if k not in ("func", "command") and v is not None
        },
        "seed": getattr(args, "seed", None),
        "artifacts": artifacts,
        "wall_clock_s": round(wall, 6),
        "version": __version__,
    }
    if extra:
        doc.update(extra)
    return _write(os.path.join(out, "manifest.json"), json.dumps(doc, indent=2, sort_keys=True) + "\n")


def cmd_validate(args) -> int:
    model = _read_model(args.model)
    print(f"model ok: {model.n_states} states, lambda={model.lam:g}, horizon={model.horizon:g}")
    if model.lyapunov is None:
        print("assumptions: skipped (no lyapunov data)")
        return EXIT_OK
    report = check_assumptions(model)
    for c in report.checks:
        print(f"  {c.name}: {'pass' if c.passed else 'FAIL'} (margin {c.margin:.4g} at {c.location})")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_solve(args) -> int:
    t_start = time.time()
    model = _read_model(args.model)
    out = _out_dir(args)
    config = SolverConfig(n_steps=args.steps, scheme=args.scheme, tol=args.tol)
    if args.scheme == "picard":
        field = picard_solve(model, config)
        strategies = saddle_from_field(model, field, config.game_tol)
    else:
        field, strategies = backward_solve(model, config)
    csv_path = _write(
        os.path.join(out, "solution.csv"), export_solution_csv(model, field, strategies)
    )
    _manifest(out, "solve", args, [csv_path], time.time() - t_start)
    risk = to_risk_value(field, model.lam)
    for x in range(model.n_states):
        print(f"phi(0, {model.state_name(x)}) = {FMT % field.phi[0, x]}   risk value {FMT % risk[0, x]}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    t_start = time.time()
    model = _read_model(args.model)
    out = _out_dir(args)
    with open(args.strategies) as fh:
        _, strategies = import_solution_csv(model, fh.read())
    field = policy_evaluate(model, strategies)
    csv_path = _write(
        os.path.join(out, "evaluation.csv"), export_solution_csv(model, field, strategies)
    )
    _manifest(out, "evaluate", args, [csv_path], time.time() - t_start)
    print(f"phi(0, .) = {[float(FMT % v) for v in field.phi[0]]}")
    return EXIT_OK


def cmd_best_response(args) -> int:
    t_start = time.time()
    model = _read_model(args.model)
    out = _out_dir(args)
    with open(args.strategies) as fh:
        _, strategies = import_solution_csv(model, fh.read())
    steps = args.steps or strategies.grid.n_steps
    config = SolverConfig(n_steps=steps, tol=args.tol)
    field = best_response_solve(model, strategies, args.side, config)
    strat_echo = strategies.resample(field.grid)
    csv_path = _write(
        os.path.join(out, "best_response.csv"), export_solution_csv(model, field, strat_echo)
    )
    _manifest(out, "best-response", args, [csv_path], time.time() - t_start)
    print(f"best-response phi(0, .) = {[float(FMT % v) for v in field.phi[0]]}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    t_start = time.time()
    model = _read_model(args.model)
    out = _out_dir(args)
    with open(args.strategies) as fh:
        _, strategies = import_solution_csv(model, fh.read())
    config = SimConfig(n_paths=args.paths, rng_seed=args.seed)
    est = estimate_J(model, strategies, args.t0, args.x0, config)
    doc = {
        "mean": _fnum(est.mean),
        "stderr": _fnum(est.stderr),
        "n_paths": est.n_paths,
        "min_exponent": _fnum(est.min_exponent),
        "max_exponent": _fnum(est.max_exponent),
        "risk_value": _fnum(np.log(est.mean) / model.lam),
        "seed": args.seed,
        "t0": _fnum(args.t0),
        "x0": args.x0,
    }
    est_path = _write(os.path.join(out, "estimate.json"), json.dumps(doc, indent=2, sort_keys=True) + "\n")
    artifacts = [est_path]
    if args.dump_trajectories:
        lines = ["path_id,jump_index,time,state,exponent_so_far"]
        for i in range(min(args.paths, args.dump_trajectories)):
            tr = simulate_path(model, strategies, args.t0, args.x0, _path_rng(args.seed, i))
            for j, ((t, x), e) in enumerate(zip(tr.jumps, tr.jump_exponents)):
                lines.append(f"{i},{j},{FMT % t},{x},{FMT % e}")
        artifacts.append(_write(os.path.join(out, "trajectories.csv"), "\n".join(lines) + "\n"))
    _manifest(out, "simulate", args, artifacts, time.time() - t_start)
    print(f"mean {FMT % est.mean}  stderr {FMT % est.stderr}  ({est.n_paths} paths)")
    return EXIT_OK


def cmd_verify(args) -> int:
    t_start = time.time()
    model = _read_model(args.model)
    out = _out_dir(args)
    sections = {}
    ok = True

    if model.lyapunov is not None:
        rep = check_assumptions(model)
        sections["assumptions"] = json.loads(rep.to_json())
        ok = ok and rep.passed
    else:
        sections["assumptions"] = "skipped (no lyapunov data)"

    strategies = None
    if args.field:
        with open(args.field) as fh:
            field, strategies = import_solution_csv(model, fh.read())
        if model.lyapunov is not None:
            rep = check_bounds(field, model)
            sections["bounds"] = json.loads(rep.to_json())
            ok = ok and rep.passed
    if args.strategies:
        with open(args.strategies) as fh:
            _, strategies = import_solution_csv(model, fh.read())
    if strategies is not None:
        config = SolverConfig(n_steps=strategies.grid.n_steps)
        gap = exploitability(model, strategies, config, refine=args.refine)
        sections["exploitability"] = {"gap": _fnum(gap), "tolerance": _fnum(args.gap_tol)}
        ok = ok and gap <= args.gap_tol

    sections["passed"] = ok
    path = _write(os.path.join(out, "report.json"), json.dumps(sections, indent=2, sort_keys=True) + "\n")
    _manifest(out, "verify", args, [path], time.time() - t_start)
    print(f"verify: {'pass' if ok else 'FAIL'} (report at {path})")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_ladder(args) -> int:
    t_start = time.time()
    model = _read_model(args.model)
    out = _out_dir(args)
    n_list = [float(v) for v in args.n_list.split(",")]
    n_list = [int(v) if v.is_integer() else v for v in n_list]
    probes = [_parse_probe(p) for p in args.probe] if args.probe else [(0.0, 0)]
    config = SolverConfig(n_steps=args.steps, tol=args.tol)
    report = ladder_run(model, n_list, probes, config)
    path = _write(os.path.join(out, "ladder.json"), report.to_json() + "\n")
    extra = {}
    if args.shift_check_n is not None:
        extra["shift_identity_rel_err"] = _fnum(
            shift_identity_check(model, args.shift_check_n, 0.0, config)
        )
    _manifest(out, "ladder", args, [path], time.time() - t_start, extra)
    print(
        f"ladder {report.direction}: monotone_ok={report.monotone_ok} "
        f"converged_gap={FMT % report.converged_gap}"
    )
    return EXIT_OK if report.monotone_ok else EXIT_CHECK_FAILED


def cmd_game(args) -> int:
    rows = []
    with open(args.matrix) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(v) for v in line.split(",")])
    sol = solve_game(MatrixGame(np.array(rows)), args.tol)
    print(f"value {FMT % sol.value}  gap {FMT % sol.gap}")
    print("row mix:", ",".join(FMT % v for v in sol.row_mix))
    print("col mix:", ",".join(FMT % v for v in sol.col_mix))
    return EXIT_OK


def cmd_oracle(args) -> int:
    t_start = time.time()
    model = _read_model(args.model)
    out = _out_dir(args)
    probes = [_parse_probe(p) for p in args.probe] if args.probe else None
    config = SolverConfig(n_steps=args.steps, tol=args.tol)
    report = oracle_fine_grid(model, args.refine, config, probes)
    path = _write(os.path.join(out, "oracle.json"), report.to_json() + "\n")
    _manifest(out, "oracle", args, [path], time.time() - t_start)
    print(
        f"max deviation: backward {FMT % report.max_dev_backward}, "
        f"picard {FMT % report.max_dev_picard}"
    )
    return EXIT_OK


def _parse_probe(text: str) -> tuple[float, int]:
    t, x = text.split(",")
    return float(t), int(x)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pdmg", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        sp = sub.add_parser(name, **kwargs)
        sp.set_defaults(func=fn)
        return sp

    sp = add("validate", cmd_validate, help="load a model and check its assumptions")
    sp.add_argument("--model", required=True)

    sp = add("solve", cmd_solve, help="solve the optimality equation backward in time")
    sp.add_argument("--model", required=True)
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--scheme", choices=["semi_lagrangian", "picard"], default="semi_lagrangian")
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--out")

    sp = add("evaluate", cmd_evaluate, help="evaluate a fixed strategy pair")
    sp.add_argument("--model", required=True)
    sp.add_argument("--strategies", required=True, help="solution CSV")
    sp.add_argument("--out")

    sp = add("best-response", cmd_best_response, help="one-sided best response solve")
    sp.add_argument("--model", required=True)
    sp.add_argument("--strategies", required=True)
    sp.add_argument("--side", choices=["maximize", "minimize"], required=True)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--out")

    sp = add("simulate", cmd_simulate, help="Monte Carlo estimate of the exponential functional")
    sp.add_argument("--model", required=True)
    sp.add_argument("--strategies", required=True)
    sp.add_argument("--t0", type=float, default=0.0)
    sp.add_argument("--x0", type=int, default=0)
    sp.add_argument("--paths", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--dump-trajectories", type=int, default=0, metavar="N_PATHS")
    sp.add_argument("--out")

    sp = add("verify", cmd_verify, help="assumption, bound and saddle checks")
    sp.add_argument("--model", required=True)
    sp.add_argument("--field", help="solution CSV with the value field")
    sp.add_argument("--strategies", help="solution CSV with the strategy pair")
    sp.add_argument("--refine", type=int, default=8)
    sp.add_argument("--gap-tol", type=float, default=2e-3)
    sp.add_argument("--out")

    sp = add("ladder", cmd_ladder, help="truncation ladder monotonicity run")
    sp.add_argument("--model", required=True)
    sp.add_argument("--n-list", required=True, help="comma-separated increasing levels")
    sp.add_argument("--probe", action="append", help="t,x (repeatable)")
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--shift-check-n", type=float)
    sp.add_argument("--out")

    sp = add("game", cmd_game, help="solve a zero-sum matrix game from a CSV")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--tol", type=float, default=1e-9)

    sp = add("oracle", cmd_oracle, help="fine-grid cross-solver deviation report")
    sp.add_argument("--model", required=True)
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--refine", type=int, default=8)
    sp.add_argument("--probe", action="append")
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--out")

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ModelFormatError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ModelValidationError, SolverError, MatrixGameError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
