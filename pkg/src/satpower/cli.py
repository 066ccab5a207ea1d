"""Command-line entry point.

Exit codes: 0 success, 1 infeasible or singular instance, 2 usage or
scenario-file errors. Diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from satpower.ese import (
    EseError,
    SingularSystem,
    check_order_property,
    check_pareto,
    solve_ese,
)
from satpower.game import feasibility_check, sinr_region_load
from satpower.harness import ScenarioError, read_scenario, run, with_overrides, write_trace
from satpower.learners import LearnerKind
from satpower.ltse import DEFAULT_SAMPLES, LtseError, satisfaction_report, solve_efficient_ltse

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override scenario and channel seed")
    common.add_argument("--max-iters", type=int, default=argparse.SUPPRESS, help="override the scenario horizon")
    common.add_argument("--rho", type=float, default=argparse.SUPPRESS, help="override the convergence threshold")

    parser = _Parser(prog="satpower", description="Satisfaction-equilibrium power control", parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ese", parents=[common], help="solve the efficient satisfaction equilibrium")
    p.add_argument("scenario")

    p = sub.add_parser("simulate", parents=[common], help="run the scenario's learner and write a trace")
    p.add_argument("scenario")
    p.add_argument("--out", required=True, help="CSV trace path")

    p = sub.add_parser("bound", parents=[common], help="Chebyshev bound vs empirical satisfaction rate")
    p.add_argument("scenario")
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--at", choices=("initial", "ltse"), default="initial",
                   help="evaluate at the scenario's initial powers or at the efficient LTSE")

    p = sub.add_parser("discover", parents=[common], help="progressive capacity discovery")
    p.add_argument("scenario")
    return parser


def _fmt_vec(v) -> str:
    return "[" + ", ".join(f"{x:.10g}" for x in v) + "]"


def _cmd_ese(s, args) -> int:
    cfg = s.game
    if not feasibility_check(cfg):
        print(f"warning: total demand {sum(cfg.demands):.6g} exceeds capacity {cfg.capacity:.6g}",
              file=sys.stderr)
    try:
        sol = solve_ese(cfg)
    except SingularSystem as e:
        print(f"error: singular system (det={e.det:.3e})", file=sys.stderr)
        return EXIT_INFEASIBLE
    except EseError as e:
        print(f"error: {e}", file=sys.stderr)
        print(f"note: SINR-region load {sinr_region_load(cfg.demands):.6g} (attainable only below 1)",
              file=sys.stderr)
        return EXIT_INFEASIBLE
    print(f"ese_powers_mw: {_fmt_vec(sol.powers)}")
    print(f"sum_power_mw: {sol.powers.sum():.10g}")
    print(f"determinant: {sol.determinant:.10g}")
    print(f"order_property: {check_order_property(cfg, sol)}")
    print(f"pareto_optimal: {check_pareto(cfg, sol, 0.01)}")
    return EXIT_OK


def _cmd_simulate(s, args) -> int:
    trace = run(s)
    try:
        write_trace(trace, args.out)
    except OSError as e:
        print(f"error: cannot write {args.out}: {e.strerror}", file=sys.stderr)
        return EXIT_USAGE
    summ = trace.summary()
    print(f"steps: {summ['steps']}")
    print(f"converged: {summ['converged']}")
    print(f"all_satisfied: {summ['all_satisfied']}")
    print(f"final_powers_mw: {_fmt_vec(summ['final_powers'])}")
    print(f"final_throughput: {_fmt_vec(summ['final_throughput'])}")
    print(f"trace: {args.out}")
    return EXIT_OK


def _cmd_bound(s, args) -> int:
    cfg = s.game
    if args.samples < 1:
        print("error: --samples must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    powers = s.initial_powers
    if args.at == "ltse":
        try:
            powers = solve_efficient_ltse(cfg, s.channel, args.samples, s.seed).powers
        except LtseError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_INFEASIBLE
    print(f"powers_mw: {_fmt_vec(powers)}  samples: {args.samples}  seed: {s.seed}")
    print("user  demand        mean_r        var_r         bound         empirical")
    for u in satisfaction_report(cfg, powers, s.channel, args.samples, s.seed):
        print(f"{u.user:<5d} {u.demand:<13.6g} {u.mean_r:<13.6g} {u.var_r:<13.6g} "
              f"{u.bound:<13.6g} {u.empirical_rate:.6g}")
    return EXIT_OK


def _cmd_discover(s, args) -> int:
    s = replace(s, algorithm=LearnerKind.PROGRESSIVE_BP)
    trace = run(s)
    total = float(trace.final_demands.sum())
    print(f"steps: {trace.n_steps}")
    print(f"final_demands: {_fmt_vec(trace.final_demands)}")
    print(f"sum_demands: {total:.10g}")
    print(f"capacity: {s.game.capacity:.10g}")
    print(f"all_satisfied: {trace.all_satisfied}")
    return EXIT_OK


_COMMANDS = {"ese": _cmd_ese, "simulate": _cmd_simulate, "bound": _cmd_bound, "discover": _cmd_discover}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    try:
        s = read_scenario(args.scenario)
        s = with_overrides(
            s,
            seed=getattr(args, "seed", None),
            horizon=getattr(args, "max_iters", None),
            rho=getattr(args, "rho", None),
        )
    except ScenarioError as e:
        print(f"error: scenario {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return _COMMANDS[args.command](s, args)


if __name__ == "__main__":
    sys.exit(main())
