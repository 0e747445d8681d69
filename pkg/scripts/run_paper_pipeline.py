#!/usr/bin/env python3
"""End-to-end experiment driver.

Sweeps the synthetic grid plus the board games, fits the log-log models
for both targets, renders heatmaps, and plays the self-play calibration
match.  Everything lands in one output directory with the invocation
recorded at the top of every file.
"""

import argparse
import shlex
import sys
from pathlib import Path

from bridgebench.agents import SearchBudget
from bridgebench.bench import AgentSpec, run_match
from bridgebench.cli import load_plan
from bridgebench.cli import main as cli_main
from bridgebench.report import ScoreRow, write_score_table

FULL_PLAN = """\
[plan]
algorithms = uct, minimax
backends = native
budget_ms = {budget_ms}
trials = {trials}
profile_playouts = 200
seed = {seed}

[games]
list =
    tictactoe
    nim{{h1=3,h2=4,h3=5}}
    breakthrough{{size=5}}

[synthetic-grid]
branching = 2, 3, 4, 5
depth = 4, 6, 8, 10
cost_knob = 4, 32, 256
"""

QUICK_PLAN = """\
[plan]
algorithms = uct, minimax
backends = native
budget_ms = {budget_ms}
trials = {trials}
profile_playouts = 60
seed = {seed}

[games]
list =
    tictactoe

[synthetic-grid]
branching = 2, 3
depth = 4, 6
cost_knob = 8
"""


def sh(argv):
    print("+ bridgebench " + " ".join(shlex.quote(a) for a in argv),
          file=sys.stderr)
    code = cli_main(argv)
    if code != 0:
        raise SystemExit(f"step failed with exit code {code}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="results")
    parser.add_argument("--budget-ms", type=int, default=100)
    parser.add_argument("--trials", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--quick", action="store_true",
                        help="small grid for a fast end-to-end look")
    parser.add_argument("--selfplay-games", type=int, default=100)
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    template = QUICK_PLAN if args.quick else FULL_PLAN
    plan_path = out / "plan.ini"
    plan_path.write_text(template.format(budget_ms=args.budget_ms,
                                         trials=args.trials, seed=args.seed))
    plan = load_plan(plan_path)
    print(f"plan: {len(plan.games)} games, budget {plan.budget_ms} ms, "
          f"{plan.trials} trials", file=sys.stderr)

    sh(["sweep", "--plan", str(plan_path), "--out-dir", str(out)])
    data = out / "dataset.csv"

    for target in ("r", "e"):
        sh(["fit", "--data", str(data), "--target", target, "--prune",
            "--out", str(out / f"model_{target}.txt"),
            "--table", str(out / f"table_{target}.txt")])

    sh(["heatmap", "--model", str(out / "model_r.txt"), "--data", str(data),
        "--x", "t", "--y", "d", "--out", str(out / "heatmap_r.svg")])
    sh(["heatmap", "--model", str(out / "model_e.txt"), "--data", str(data),
        "--x", "t", "--y", "b", "--out", str(out / "heatmap_e.svg")])

    # identical agents should land near 0.5 with alternating starts
    spec = AgentSpec(algorithm="uct")
    board = next(g for g in plan.games if g.name == "tictactoe")
    result = run_match(board, spec, spec, args.selfplay_games,
                       SearchBudget.iterations(200), seed=args.seed)
    write_score_table([ScoreRow("uct/native", "uct/native", result)],
                      out / "selfplay.txt",
                      invocation="scripts/run_paper_pipeline.py "
                      + " ".join(shlex.quote(a) for a in sys.argv[1:]))
    print(f"self-play score_avg={result.score_avg:.4f} over "
          f"{result.games_played} games", file=sys.stderr)
    print(f"all outputs in {out}/", file=sys.stderr)


if __name__ == "__main__":
    main()
