"""Command-line interface: ``platoon-nash {simulate,validate,stability,compare}``.

Exit codes: 0 success, 2 validation failure, 64 usage error, 66 unreadable
or invalid scenario file.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .closed_form import TopologyMismatch
from .matfun import NearDegenerateSpectrum
from .model import ScenarioError, TopologyKind
from .mpc import MpcConfig, compare, mpc_rollout
from .scenario_io import ScenarioParseError, parse_scenario, resolve_scenario_path, sample, save_table, write_csv
from .solve import solve

EX_OK = 0
EX_VALIDATION = 2
EX_USAGE = 64
EX_NOINPUT = 66

TRAJ_TOL = 1e-7
COSTATE_TOL = 1e-8


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _load(arg: str):
    path = resolve_scenario_path(arg)
    return parse_scenario(path)


def cmd_simulate(args, out) -> int:
    sf = _load(args.scenario)
    sc = sf.scenario
    M = args.samples or sf.samples
    if M < 2:
        raise UsageError("--samples must be at least 2")
    if args.solver == "mpc":
        table = mpc_rollout(sc, sf.mpc or MpcConfig()).table
        used = "mpc"
    else:
        sol, used = solve(sc, args.solver)
        table = sample(sol, M)
    if args.out == "-":
        write_csv(table, out)
    else:
        target = Path(args.out) if args.out else Path(f"{sc.name or 'trajectory'}.csv")
        csv_path, dat_path = save_table(table, target)
        print(f"solver: {used}", file=out)
        print(f"wrote {csv_path} ({table.t.size} rows, {1 + 3 * sc.n} columns)", file=out)
        print(f"wrote {dat_path} (plot data, one block per vehicle)", file=out)
    return EX_OK


def cmd_validate(args, out) -> int:
    from .general_game import solve_general
    from .oracle import certify_nash, corrupted, solve_oracle

    sf = _load(args.scenario)
    sc = sf.scenario
    sol, used = solve(sc, args.solver)
    orc = solve_oracle(sc)
    t = np.linspace(0.0, sc.t_f, args.samples or sf.samples)
    y, u = sol.evaluate(t)
    yo, uo = orc.evaluate(t)
    rows = []

    def row(name, value, tol, ok):
        rows.append((name, value, tol, ok))

    lam_tf = float(np.max(np.abs(sol.evaluate(sc.t_f)[1])))
    row("solver lambda(t_f)", lam_tf, f"< {COSTATE_TOL:g}", lam_tf < COSTATE_TOL)
    lam_or = float(np.max(np.abs(orc.run.lambda_tf)))
    row("oracle lambda(t_f)", lam_or, f"< {COSTATE_TOL:g}", lam_or < COSTATE_TOL)
    l0 = float(np.max(np.abs(-sol.evaluate(0.0)[1] - orc.lambda0)))
    row("lambda(0) vs shooting", l0, f"< {TRAJ_TOL:g}", l0 < TRAJ_TOL)
    dy = float(np.max(np.abs(y - yo)))
    row("trajectory vs oracle", dy, f"< {TRAJ_TOL:g}", dy < TRAJ_TOL)
    du = float(np.max(np.abs(u - uo)))
    row("control vs oracle", du, f"< {TRAJ_TOL:g}", du < TRAJ_TOL)
    for i in range(1, sc.n + 1):
        rep = certify_nash(sc, sol, i, n_bumps=args.bumps)
        row(f"Nash min dJ_{i}", rep.min_delta, f">= {-rep.tolerance:.3g}", rep.passed)
    try:
        gen = solve_general(sc)
    except NearDegenerateSpectrum:
        gen = None
    if gen is not None:
        worst = min(certify_nash(sc, corrupted(gen), i, n_bumps=args.bumps).min_delta for i in range(1, sc.n + 1))
        row("corrupted lambda0 x1.1 rejected", worst, "< -1e-4", worst < -1e-4)

    print(f"scenario: {sc.name}  solver: {used}  oracle segments: {orc.segments}  steps: {orc.run.steps}", file=out)
    print(f"{'check':<34}{'value':>14}  {'tolerance':<14}status", file=out)
    for name, value, tol, ok in rows:
        print(f"{name:<34}{value:>14.3e}  {tol:<14}{'ok' if ok else 'FAIL'}", file=out)
    ok = all(r[3] for r in rows)
    print("all checks passed" if ok else "validation FAILED", file=out)
    return EX_OK if ok else EX_VALIDATION


def cmd_stability(args, out) -> int:
    from .stability import build_laplacian, convergence_study, string_stability_pf, topology_summary

    sf = _load(args.scenario)
    sc = sf.scenario
    summary = topology_summary(sc.topology)
    print(f"scenario: {sc.name}  topology: {sc.topology.kind.value}  links: {summary['links']}  "
          f"mean weight: {summary['mean_weight']:.4f}", file=out)
    for inc, label in ((True, "with virtual leader"), (False, "without virtual leader")):
        try:
            s2 = build_laplacian(sc.topology, inc).sigma2
            print(f"Fiedler value ({label}): {s2:.4f}", file=out)
        except ValueError as exc:
            print(f"Fiedler value ({label}): undefined ({exc})", file=out)
    study = convergence_study(sc, args.threshold)
    base = study.base
    times = ", ".join("--" if np.isnan(x) else f"{x:.2f}" for x in base.convergence_times)
    print(f"convergence times at threshold {args.threshold:g} (t_f = {base.horizon:g}): {times}", file=out)
    if base.internally_stable:
        print(f"mean convergence time: {base.mean_time:.2f} s", file=out)
    else:
        print(f"mean convergence time: > t_f (not converged at t_f = {base.horizon:g})", file=out)
        fin = study.final
        times = ", ".join("--" if np.isnan(x) else f"{x:.2f}" for x in fin.convergence_times)
        print(f"re-solved with t_f = {fin.horizon:g} for timing: {times}", file=out)
        if fin.internally_stable:
            print(f"mean convergence time (extended horizon): {fin.mean_time:.2f} s", file=out)
        else:
            print("still not converged on the longest horizon tried", file=out)
    if sc.topology.kind is TopologyKind.PF and sc.n >= 2:
        rep = string_stability_pf(sc)
        for k, r in enumerate(rep.ratios):
            tag = "degenerate pair" if rep.degenerate[k] else ("ok" if rep.pair_pass[k] else "amplifies")
            hom = "" if rep.homogeneous[k] else " (weights differ)"
            print(f"string ratio |e_{k + 2}(0)|/|e_{k + 1}(0)| = {r:.4f}  {tag}{hom}", file=out)
        print(f"PF string-stability condition: {'met' if rep.passed else 'violated'}", file=out)
    return EX_OK


def cmd_compare(args, out) -> int:
    sf = _load(args.scenario)
    sc = sf.scenario
    cfg = sf.mpc or MpcConfig()
    if args.N is not None or args.Ts is not None:
        cfg = MpcConfig(args.N or cfg.N, args.Ts or cfg.T_s)
    rep = compare(sc, cfg)
    print(f"scenario: {sc.name}  t_f = {sc.t_f:g}  MPC N = {cfg.N}  T_s = {cfg.T_s:g}", file=out)
    print(f"{'controller':<12}{'effort':>12}{'max |u|':>12}{'max |e(t_f)|':>15}", file=out)
    print(f"{'game':<12}{rep.game_effort:>12.4f}{rep.game_max_u:>12.4f}{rep.game_terminal_error:>15.3e}", file=out)
    print(f"{'mpc':<12}{rep.mpc_effort:>12.4f}{rep.mpc_max_u:>12.4f}{rep.mpc_terminal_error:>15.3e}", file=out)
    print(f"game solver: {rep.game_method}", file=out)
    print(f"lower effort: {'game' if rep.game_cheaper else 'mpc'}", file=out)
    return EX_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="platoon-nash", description="Open-loop Nash platoon formation games.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="solve a scenario and write trajectories")
    s.add_argument("scenario", help="scenario file or bundled scenario name")
    s.add_argument("--solver", choices=["auto", "pf", "tpf", "general", "oracle", "mpc"], default="auto")
    s.add_argument("--samples", type=int, help="number of uniform samples (default: from file)")
    s.add_argument("--out", help="CSV path ('-' for stdout); a .dat plot file is written alongside")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("validate", help="check a solver against the brute-force oracle")
    v.add_argument("scenario")
    v.add_argument("--solver", choices=["auto", "pf", "tpf", "general", "oracle"], default="auto")
    v.add_argument("--samples", type=int)
    v.add_argument("--bumps", type=int, default=20, help="tent perturbations per player")
    v.set_defaults(func=cmd_validate)

    st = sub.add_parser("stability", help="Fiedler values, convergence times, string stability")
    st.add_argument("scenario")
    st.add_argument("--threshold", type=float, default=0.01)
    st.set_defaults(func=cmd_stability)

    c = sub.add_parser("compare", help="game controller against the MPC baseline")
    c.add_argument("scenario")
    c.add_argument("--N", type=int, help="MPC prediction horizon")
    c.add_argument("--Ts", type=float, help="MPC sampling time")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EX_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"platoon-nash: error: {exc}", file=sys.stderr)
        return EX_USAGE
    except OSError as exc:
        print(f"platoon-nash: {exc}", file=sys.stderr)
        return EX_NOINPUT
    except (ScenarioParseError, ScenarioError) as exc:
        print(f"platoon-nash: invalid scenario: {exc}", file=sys.stderr)
        return EX_NOINPUT
    except TopologyMismatch as exc:
        print(f"platoon-nash: error: {exc}", file=sys.stderr)
        return EX_USAGE


if __name__ == "__main__":
    sys.exit(main())
