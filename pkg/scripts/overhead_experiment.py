#!/usr/bin/env python3
"""Cross-runtime overhead comparison on one game.

Runs both algorithms on every requested backend and prints normalized
rates with 99% confidence intervals, plus each backend's slowdown
against native.  Backends that are not available (no foreign guest
built) are reported and skipped instead of failing the run.
"""

import argparse
import shlex
import sys

from bridgebench.bench import run_throughput
from bridgebench.bridge.backends import BackendUnavailableError
from bridgebench.games import parse_game_id
from bridgebench.report import write_bench_csv


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--game", default="tictactoe")
    parser.add_argument("--backends", default="native,socket",
                        help="comma list from native,embedded,socket")
    parser.add_argument("--budget-ms", type=int, default=1000)
    parser.add_argument("--trials", type=int, default=30)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None, help="bench CSV to write")
    args = parser.parse_args()

    game = parse_game_id(args.game)
    backends = [b.strip() for b in args.backends.split(",") if b.strip()]
    records = []
    base = {}
    for algorithm in ("uct", "minimax"):
        unit = "playouts/s" if algorithm == "uct" else "expansions/s"
        for backend in backends:
            try:
                rec = run_throughput(game, algorithm, args.budget_ms,
                                     trials=args.trials, seed=args.seed,
                                     backend=backend)
            except BackendUnavailableError as exc:
                print(f"{algorithm:8s} {backend:9s} unavailable: {exc}")
                continue
            records.append(rec)
            if backend == "native":
                base[algorithm] = rec.normalized_mean
            slower = ""
            if backend != "native" and algorithm in base and rec.normalized_mean:
                slower = f"  ({base[algorithm] / rec.normalized_mean:.1f}x slower)"
            print(f"{algorithm:8s} {backend:9s} {rec.normalized_mean:12.1f} "
                  f"+- {rec.ci99_half_width:10.1f} {unit}{slower}")
    if args.out and records:
        invocation = ("scripts/overhead_experiment.py "
                      + " ".join(shlex.quote(a) for a in sys.argv[1:]))
        write_bench_csv(records, args.out, invocation=invocation)
        print(f"wrote {args.out}")
    return 0 if records else 2


if __name__ == "__main__":
    sys.exit(main())
