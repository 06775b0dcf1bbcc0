"""Command-line entry point: ``uavpower {gen,solve,sweep-theta,bench}``.

Exit codes: 0 success, 2 infeasible scenario, 3 bad input (including
unwritable output paths).
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace

from . import bench, coordinator, io
from .coordinator import SolverConfig

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_BAD_INPUT = 3

log = logging.getLogger("uavpower")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors, which is taken by 'infeasible'."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_BAD_INPUT, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _rate(text: str) -> float:
    v = float(text)
    if not v >= 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a rate >= 0 in bps, got {text}")
    return v


def _alpha(text: str) -> float:
    v = float(text)
    if not v >= 2 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"pathloss exponent must be >= 2, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    p = _Parser(prog="uavpower", description="Sum-power minimisation for a single UAV uplink.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def layout(sp, rates_help):
        sp.add_argument("--seed", type=int, default=0, help="seed for every random draw (default 0)")
        sp.add_argument("--k", type=_positive_int, default=20, help="number of ground terminals (default 20)")
        sp.add_argument("--radius-m", type=_positive_float, default=300.0, help="disk radius in metres (default 300)")
        sp.add_argument("--rate-bps", type=_rate, action="append", help=rates_help)
        sp.add_argument("--alpha", type=_alpha, default=2.0, help="pathloss exponent (default 2)")

    def solver(sp):
        sp.add_argument("--rel-tol", type=_positive_float, default=SolverConfig.rel_tol, help="relative objective decrease that ends the iteration")
        sp.add_argument("--max-iters", type=_positive_int, default=SolverConfig.max_iters, help="iteration cap")

    def output(sp, formats=True):
        sp.add_argument("--out", help="output file (default: stdout)")
        if formats:
            sp.add_argument("--format", choices=("csv", "json"), default="csv")

    g = sub.add_parser("gen", parents=[common], help="write a random scenario as JSON")
    layout(g, "rate demand of every terminal (default 1e6)")
    output(g, formats=False)

    s = sub.add_parser("solve", parents=[common], help="solve one scenario JSON and print the solution JSON")
    s.add_argument("scenario", help="scenario JSON file")
    s.add_argument("--starts", type=_positive_int, default=1, help="random restarts incl. the default start (default 1)")
    s.add_argument("--seed", type=int, default=0, help="seed for the restarts (default 0)")
    s.add_argument("--alpha", type=_alpha, help="override the scenario's pathloss exponent")
    solver(s)
    output(s, formats=False)

    w = sub.add_parser("sweep-theta", parents=[common], help="sum power against half-beamwidth, UAV at the disk centre")
    layout(w, "rate demand; repeat for several curves (default 1e6, 3e6, 5e6)")
    output(w)

    b = sub.add_parser("bench", parents=[common], help="compare the solver against the baselines over a rate grid")
    layout(b, "rate grid point; repeat for several (default 1e6 .. 5e6 in 5 steps)")
    b.add_argument("--trials", type=_positive_int, default=20, help="layouts per rate (default 20)")
    b.add_argument("--starts", type=_positive_int, default=50, help="starts of the Exhaustive baseline (default 50)")
    solver(b)
    output(b)
    return p


def _check_writable(path: str | None) -> None:
    """Fail before a long run rather than after it."""
    if path is None:
        return
    try:
        with open(path, "a", encoding="utf-8"):
            pass
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _spec(args, rates_default) -> bench.ExperimentSpec:
    rates = tuple(args.rate_bps) if args.rate_bps else rates_default
    kw = dict(K=args.k, radius=args.radius_m, rate_grid=rates, seed=args.seed, alpha=args.alpha, out=args.out)
    if hasattr(args, "trials"):
        kw.update(trials=args.trials, starts=args.starts)
    return bench.ExperimentSpec(**kw)


def cmd_gen(args) -> int:
    spec = _spec(args, (1e6,))
    scn = bench.gen_scenario(spec, args.seed, rate=spec.rate_grid[0])
    _write(io.dumps(io.scenario_to_dict(scn)), args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    scn = io.load_scenario(args.scenario)
    if args.alpha is not None:
        scn = replace(scn, pathloss_exp=args.alpha)
    cfg = SolverConfig(rel_tol=args.rel_tol, max_iters=args.max_iters, starts=args.starts, seed=args.seed)
    _check_writable(args.out)
    sol = coordinator.solve_multistart(scn, cfg)
    _write(io.dumps(io.solution_to_dict(sol)), args.out)
    if sol.status == "infeasible":
        log.error("infeasible: %s", sol.message)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = _spec(args, (1e6, 3e6, 5e6))
    _check_writable(args.out)
    base = bench.gen_scenario(spec, args.seed)
    rows = []
    for rate in spec.rate_grid:
        rows.extend(bench.sweep_theta(bench.with_rate(base, rate), spec.theta_grid))
    meta = bench.experiment_metadata(spec, SolverConfig(), "sweep-theta")
    if args.out:
        bench.emit(rows, args.out, args.format, metadata=meta)
    else:
        sys.stdout.write(bench.render(rows, args.format))
    return EXIT_OK


def cmd_bench(args) -> int:
    spec = _spec(args, bench.DEFAULT_RATES)
    _check_writable(args.out)
    cfg = SolverConfig(rel_tol=args.rel_tol, max_iters=args.max_iters, starts=spec.starts, seed=spec.seed)
    rows = bench.run_experiment(spec, cfg)
    meta = bench.experiment_metadata(spec, cfg, "bench")
    meta["summary"] = [
        {k: (v if not isinstance(v, float) or math.isfinite(v) else None) for k, v in vars(s).items()} for s in bench.summarize(rows)
    ]
    if args.out:
        bench.emit(rows, args.out, args.format, metadata=meta)
    else:
        sys.stdout.write(bench.render(rows, args.format))
    for s in bench.summarize(rows):
        log.info("%-10s R=%.3g bps mean=%.3f dBm ok=%d infeasible=%d", s.baseline, s.R_bps, s.mean_power_dBm, s.trials, s.infeasible)
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "sweep-theta": cmd_sweep, "bench": cmd_bench}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except io.ScenarioError as exc:
        print(f"uavpower: bad input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except OSError as exc:
        print(f"uavpower: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except ValueError as exc:
        print(f"uavpower: bad input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
