"""Command-line entry point: ``cubecov {simulate,analytic,verify,sweep}``.

Exit codes: 0 success, 1 domain error (violated precondition), 2 usage error.
Data goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from . import analytic
from .algorithms import lvd, mvd, mvd_general, general_factor_threshold
from .core import CostMetric, CostMode
from .coverage import verify_exact, verify_sampled
from .errors import CubeCovError
from .experiments import SweepSpec, emit_csv, parse_n_list, run_sweep, write_metadata
from .placement import MASK64, SeedSpec, place_uniform, read_placement, write_placement

SEED_ENV = "CUBECOV_SEED"


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value <= MASK64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return _u64(env)
        except argparse.ArgumentTypeError as exc:
            raise CubeCovError(f"{SEED_ENV}: {exc}") from None
    return 0


def _add_seed(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=_u64, default=None,
                   help=f"master seed, unsigned 64-bit (default: ${SEED_ENV} or 0)")


def _add_mode(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=[m.value for m in CostMode], default=CostMode.PER_PHASE.value,
                   help="cost metric: sum over elementary moves (per-phase) or net displacement (end-to-end)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cubecov", description="Random sensor coverage of the d-dimensional cube.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="place sensors and run one displacement algorithm",
                         description="Place n sensors uniformly at random and run one algorithm; prints JSON.")
    sim.add_argument("--alg", choices=["mv", "mv-general", "lv"], required=True,
                     help="mv: n must be a perfect d-th power; mv-general: any n; lv: subcube algorithm (y = 1)")
    sim.add_argument("--d", type=_positive_int, required=True, help="dimension")
    sim.add_argument("--n", type=_positive_int, required=True, help="number of sensors")
    sim.add_argument("--a", type=float, required=True, help="cost exponent a > 0")
    sim.add_argument("--y", type=float, default=1.0, help="cube side length (default 1)")
    sim.add_argument("--f", type=float, default=None,
                     help="radius factor for mv-general/lv (default: the smallest admissible value)")
    _add_seed(sim)
    _add_mode(sim)
    sim.add_argument("--dump-log", metavar="PATH", help="write the movement log as CSV")
    sim.add_argument("--dump-placement", metavar="PATH", help="write the initial placement as CSV")
    sim.add_argument("--dump-final", metavar="PATH", help="write the final positions as CSV (input for verify)")

    ana = sub.add_parser("analytic", help="expected costs from order-statistic integrals",
                         description="Evaluate expected-cost integrals; prints CSV.")
    ana.add_argument("quantity", choices=["d-total", "phase1", "recursive", "lv-constants"],
                     help="d-total: MV_1 on n sensors; phase1: first phase of MV_d; recursive: all of MV_d; "
                          "lv-constants: p, A, x0 and the radius-factor threshold")
    ana.add_argument("--n", type=_positive_int, default=None, help="number of sensors (not used by lv-constants)")
    ana.add_argument("--d", type=_positive_int, default=1, help="dimension (default 1)")
    ana.add_argument("--a", type=float, required=True, help="cost exponent a > 0")
    ana.add_argument("--rel-tol", type=float, default=1e-10, help="quadrature relative tolerance (default 1e-10)")

    ver = sub.add_parser("verify", help="check coverage of a placement file",
                         description="Check whether sensing cubes of half-width r cover [0, y]^d; prints JSON.")
    ver.add_argument("--placement", required=True, metavar="PATH", help="CSV with header sensor_id,x1,...,xd")
    ver.add_argument("--r", type=float, required=True, help="sensing radius (L-infinity half-width)")
    ver.add_argument("--y", type=float, default=1.0, help="cube side length (default 1)")
    how = ver.add_mutually_exclusive_group()
    how.add_argument("--exact", action="store_true", help="exact arrangement check (default)")
    how.add_argument("--samples", type=_positive_int, help="Monte Carlo check with this many random points")
    _add_seed(ver)

    swp = sub.add_parser("sweep", help="Monte Carlo sweep over n, CSV output",
                         description="Run seeded trials for each n and repeat; writes CSV.")
    swp.add_argument("--alg", choices=["mv", "lv"], required=True, help="algorithm")
    swp.add_argument("--d", type=_positive_int, required=True, help="dimension")
    swp.add_argument("--a", type=float, required=True, help="cost exponent a > 0")
    swp.add_argument("--y", type=float, default=1.0, help="cube side length (default 1)")
    swp.add_argument("--f", type=float, default=None, help="LV radius factor (default: threshold)")
    swp.add_argument("--n-list", required=True, metavar="SPEC",
                     help="comma list of N, LO..HI, LO..HI^P (powers of each value) or B^LO..HI, e.g. 2..60^2")
    swp.add_argument("--trials", type=_positive_int, default=32, help="trials per n and repeat (default 32)")
    swp.add_argument("--repeats", type=_positive_int, default=3, help="repeats, one CSV row each (default 3)")
    _add_seed(swp)
    _add_mode(swp)
    swp.add_argument("--out", required=True, metavar="PATH",
                     help="CSV destination ('-' for stdout); a PATH.meta.json sidecar records the sweep spec")
    swp.add_argument("--jobs", type=_positive_int, default=None,
                     help="worker processes (default: number of CPUs); results do not depend on it")
    return parser


def _simulate(args) -> int:
    seed = SeedSpec(_resolve_seed(args))
    metric = CostMetric(args.a, CostMode(args.mode))
    swarm = place_uniform(args.n, args.d, args.y, seed)
    f = args.f
    if args.alg == "mv":
        res = mvd(swarm)
    elif args.alg == "mv-general":
        f = general_factor_threshold(args.n, args.d) if f is None else f
        res = mvd_general(swarm, f, seed)
    else:
        params = analytic.lv_constants(args.a, args.d, f)
        f = params.f
        res = lvd(swarm, params, seed)
    if args.dump_placement:
        write_placement(swarm, args.dump_placement)
    if args.dump_final:
        write_placement(res.final, args.dump_final)
    if args.dump_log:
        res.log.write_csv(args.dump_log)
    moved = sorted({int(i) for ph in res.log.phases for i in ph.sensor_ids})
    out = {
        "alg": args.alg, "d": args.d, "n": args.n, "a": args.a, "y": args.y, "f": f,
        "r": res.final.r, "seed": seed.master_seed, "mode": metric.mode.value,
        "cost": res.cost(metric), "branch": res.branch.value, "moved_sensors": len(moved),
    }
    print(json.dumps(out))
    return 0


def _analytic(args) -> int:
    cfg = analytic.QuadratureConfig(rel_tol=args.rel_tol)
    w = csv.writer(sys.stdout, lineterminator="\n")
    if args.quantity == "lv-constants":
        p = analytic.lv_constants(args.a, args.d)
        w.writerow(["a", "d", "p", "A", "x0", "f_threshold", "min_n"])
        w.writerow([args.a, args.d, repr(p.p), repr(p.A), repr(p.x0), repr(p.f_threshold), p.min_sensors])
        return 0
    if args.n is None:
        raise CubeCovError(f"analytic {args.quantity} needs --n")
    n, d, a = args.n, args.d, args.a
    row = {"n": n, "d": d, "a": a, "D_a": "", "phase1": "", "recursive_total": "", "theory_const_ratio": ""}
    if args.quantity == "d-total":
        value = analytic.d_total(n, a, cfg)
        row["D_a"] = repr(value)
        row["theory_const_ratio"] = repr(value / n ** (1 - a / 2))
    elif args.quantity == "phase1":
        value = analytic.phase1_cost(n, d, a, cfg)
        row["phase1"] = repr(value)
        row["theory_const_ratio"] = repr(value / n ** (1 - a / d))
    else:
        value = analytic.recursive_expected_cost(n, d, a, cfg)
        row["recursive_total"] = repr(value)
        row["theory_const_ratio"] = repr(value / n ** (1 - a / (2 * d)))
    w.writerow(list(row))
    w.writerow(list(row.values()))
    return 0


def _verify(args) -> int:
    swarm = read_placement(args.placement, args.y, args.r)
    if args.samples:
        report = verify_sampled(swarm, args.samples, SeedSpec(_resolve_seed(args)))
    else:
        report = verify_exact(swarm)
    print(json.dumps(report.to_dict()))
    return 0


def _sweep(args) -> int:
    spec = SweepSpec(args.alg.upper(), args.d, args.a, tuple(parse_n_list(args.n_list)), y=args.y,
                     trials=args.trials, repeats=args.repeats, master_seed=_resolve_seed(args),
                     mode=CostMode(args.mode), f=args.f)
    rows = run_sweep(spec, jobs=args.jobs)
    if args.out == "-":
        emit_csv(rows, sys.stdout)
    else:
        emit_csv(rows, args.out)
        write_metadata(spec, args.out + ".meta.json")
    return 0


HANDLERS = {"simulate": _simulate, "analytic": _analytic, "verify": _verify, "sweep": _sweep}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return HANDLERS[args.command](args)
    except CubeCovError as exc:
        print(f"cubecov {args.command}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"cubecov {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
