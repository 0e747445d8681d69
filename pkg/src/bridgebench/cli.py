"""Single command-line entry point.

Exit codes: 0 success, 1 usage error, 2 runtime failure.  Every file this
tool produces embeds the invocation (flags and seed) as a leading comment
so results can be reproduced from the artifact alone.
"""

from __future__ import annotations

import argparse
import configparser
import math
import shlex
import sys
from dataclasses import dataclass, field
from pathlib import Path


class UsageError(ValueError):
    """Bad arguments or a malformed plan file; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> _Parser:
    parser = _Parser(prog="bridgebench",
                     description="game-tree search throughput lab")
    sub = parser.add_subparsers(dest="command", required=True)

    games_p = sub.add_parser("games", help="list game families and defaults")
    games_p.add_argument("action", choices=["list"])

    profile_p = sub.add_parser("profile",
                               help="estimate d, t, b from random playouts")
    profile_p.add_argument("game")
    profile_p.add_argument("--playouts", type=int, default=200)
    profile_p.add_argument("--seed", type=int, default=0)
    profile_p.add_argument("--out")

    serve_p = sub.add_parser("serve", help="host the engine for guests")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=25333)
    serve_p.add_argument("--games", default=None,
                         help="comma list of game ids or family names to allow")

    guest_p = sub.add_parser("guest",
                             help="run the reference guest against a host")
    guest_p.add_argument("--host", default="127.0.0.1")
    guest_p.add_argument("--port", type=int, default=25333)

    bench_p = sub.add_parser("bench", help="throughput of one agent on one game")
    bench_p.add_argument("--game", required=True)
    bench_p.add_argument("--agent", required=True, choices=["uct", "minimax"])
    bench_p.add_argument("--backend", default="native",
                         choices=["native", "embedded", "socket"])
    bench_p.add_argument("--budget-ms", type=int, default=1000)
    bench_p.add_argument("--trials", type=int, default=100)
    bench_p.add_argument("--seed", type=int, default=0)
    bench_p.add_argument("--c", type=float, default=None,
                         help="UCB1 exploration constant")
    bench_p.add_argument("--out")

    match_p = sub.add_parser("match", help="head-to-head score between agents")
    match_p.add_argument("--game", required=True)
    match_p.add_argument("--p1", required=True, metavar="SPEC",
                         help="agent spec, e.g. uct or uct@socket:c=1.0")
    match_p.add_argument("--p2", required=True, metavar="SPEC")
    match_p.add_argument("--games", type=int, default=100, dest="games_count")
    group = match_p.add_mutually_exclusive_group()
    group.add_argument("--budget-ms", type=int, default=None)
    group.add_argument("--iterations", type=int, default=None)
    match_p.add_argument("--seed", type=int, default=0)
    match_p.add_argument("--out")

    sweep_p = sub.add_parser("sweep", help="run a plan file end to end")
    sweep_p.add_argument("--plan", required=True)
    sweep_p.add_argument("--out-dir", default=".")

    fit_p = sub.add_parser("fit", help="log-log regression on a sweep dataset")
    fit_p.add_argument("--data", required=True)
    fit_p.add_argument("--target", required=True, choices=["r", "e"])
    fit_p.add_argument("--features", default="d,t,b")
    fit_p.add_argument("--method", default="gd", choices=["gd", "ols"])
    fit_p.add_argument("--prune", action="store_true")
    fit_p.add_argument("--test-fraction", type=float, default=0.0)
    fit_p.add_argument("--seed", type=int, default=0)
    fit_p.add_argument("--out", help="model file to write")
    fit_p.add_argument("--table", help="model table file to write")

    predict_p = sub.add_parser("predict", help="evaluate a saved model")
    predict_p.add_argument("--model", required=True)
    predict_p.add_argument("--d", type=float, default=None)
    predict_p.add_argument("--t", type=float, default=None)
    predict_p.add_argument("--b", type=float, default=None)

    heat_p = sub.add_parser("heatmap", help="model surface plus observations")
    heat_p.add_argument("--model", required=True)
    heat_p.add_argument("--data", required=True)
    heat_p.add_argument("--x", required=True, choices=["d", "t", "b"])
    heat_p.add_argument("--y", required=True, choices=["d", "t", "b"])
    heat_p.add_argument("--out", required=True)
    heat_p.add_argument("--fixed", default=None,
                        help="comma list name=value for off-axis features")
    heat_p.add_argument("--title", default=None)

    sub.add_parser("selfcheck", help="run the built-in oracle suite")

    return parser


# --- experiment plans --------------------------------------------------

@dataclass
class ExperimentPlan:
    games: list = field(default_factory=list)
    algorithms: list = field(default_factory=lambda: ["uct", "minimax"])
    backends: list = field(default_factory=lambda: ["native"])
    budget_ms: int = 100
    trials: int = 3
    profile_playouts: int = 200
    seed: int = 0
    out_dir: str = "."

    def validate(self) -> None:
        if not self.games:
            raise UsageError("plan has no games")
        if not self.algorithms or not self.backends:
            raise UsageError("plan needs at least one algorithm and backend")
        for alg in self.algorithms:
            if alg not in ("uct", "minimax"):
                raise UsageError(f"unknown algorithm {alg!r} in plan")
        for backend in self.backends:
            if backend not in ("native", "embedded", "socket"):
                raise UsageError(f"unknown backend {backend!r} in plan")
        if self.budget_ms <= 0 or self.trials <= 0 or self.profile_playouts <= 0:
            raise UsageError("budget_ms, trials, profile_playouts must be positive")


def _csv_list(raw: str) -> list[str]:
    return [item.strip() for item in raw.split(",") if item.strip()]


def _int_list(raw: str, label: str) -> list[int]:
    try:
        return [int(item) for item in _csv_list(raw)]
    except ValueError:
        raise UsageError(f"{label} must be a comma list of integers") from None


def load_plan(path) -> ExperimentPlan:
    """Plain key=value sections; see README for the schema."""
    from .games import parse_game_id

    config = configparser.ConfigParser()
    read = config.read(path)
    if not read:
        raise UsageError(f"cannot read plan file {path}")
    plan = ExperimentPlan()
    if config.has_section("plan"):
        section = config["plan"]
        known = {"algorithms", "backends", "budget_ms", "trials",
                 "profile_playouts", "seed"}
        for key in section:
            if key not in known:
                raise UsageError(f"unknown plan key {key!r}")
        if "algorithms" in section:
            plan.algorithms = _csv_list(section["algorithms"])
        if "backends" in section:
            plan.backends = _csv_list(section["backends"])
        for key in ("budget_ms", "trials", "profile_playouts", "seed"):
            if key in section:
                try:
                    setattr(plan, key, int(section[key]))
                except ValueError:
                    raise UsageError(f"plan key {key} must be an integer") from None
    game_texts = []
    if config.has_section("games"):
        raw = config["games"].get("list", "")
        game_texts.extend(line.strip() for line in raw.splitlines() if line.strip())
    if config.has_section("synthetic-grid"):
        section = config["synthetic-grid"]
        for key in section:
            if key not in ("branching", "depth", "cost_knob", "gen_cost"):
                raise UsageError(f"unknown synthetic-grid key {key!r}")
        branchings = _int_list(section.get("branching", ""), "branching")
        depths = _int_list(section.get("depth", ""), "depth")
        costs = _int_list(section.get("cost_knob", ""), "cost_knob") or [None]
        gens = _int_list(section.get("gen_cost", ""), "gen_cost") or [None]
        if not branchings or not depths:
            raise UsageError("synthetic-grid needs branching and depth lists")
        for b in branchings:
            for d in depths:
                for cost in costs:
                    for gen in gens:
                        parts = [f"branching={b}", f"depth={d}"]
                        if cost is not None:
                            parts.append(f"cost_knob={cost}")
                        if gen is not None:
                            parts.append(f"gen_cost={gen}")
                        game_texts.append("synthetic{" + ",".join(parts) + "}")
    try:
        plan.games = [parse_game_id(text) for text in game_texts]
    except ValueError as exc:
        raise UsageError(f"bad game id in plan: {exc}") from None
    plan.validate()
    return plan


# --- subcommands -------------------------------------------------------

def _cmd_games(args) -> int:
    from .games import DEFAULT_GEN_COST

    print("synthetic{branching,depth[,cost_knob,gen_cost,salt]}  "
          f"uniform tree, gen_cost defaults to {DEFAULT_GEN_COST}")
    print("tictactoe                                             3x3 classic")
    print("nim{h1,...,hN}                                        "
          "take from one heap, last taker wins")
    print("breakthrough{size}                                    "
          "pawn race, size defaults to 5")
    return 0


def _cmd_profile(args) -> int:
    from .bench import profile_complexity
    from .games import parse_game_id

    game = parse_game_id(args.game)
    if args.playouts <= 0:
        raise UsageError("--playouts must be positive")
    prof = profile_complexity(game, playouts=args.playouts, seed=args.seed)
    lines = [f"game={game.text()}", f"playouts={prof.playouts}",
             f"d={prof.d!r}", f"t={prof.t!r}", f"b={prof.b!r}"]
    for line in lines:
        print(line)
    if args.out:
        body = [f"# {args.invocation}"] + lines
        Path(args.out).write_text("\n".join(body) + "\n", encoding="utf-8")
        print(f"wrote {args.out}")
    return 0


def _cmd_serve(args) -> int:
    import time

    from .bridge.server import BridgeServer

    allowed = tuple(_csv_list(args.games)) if args.games else None
    server = BridgeServer(args.host, args.port, allowed_games=allowed).start()
    print(f"serving on {server.host}:{server.port}; interrupt to stop",
          flush=True)
    try:
        while True:
            time.sleep(1.0)
    except KeyboardInterrupt:
        return 0
    finally:
        server.stop()


def _cmd_guest(args) -> int:
    from .bridge.guest import reference_guest_connect

    return reference_guest_connect(args.host, args.port)


def _cmd_bench(args) -> int:
    from .agents import DEFAULT_EXPLORATION
    from .bench import run_throughput
    from .games import parse_game_id
    from .report import write_bench_csv

    game = parse_game_id(args.game)
    if args.budget_ms <= 0 or args.trials <= 0:
        raise UsageError("--budget-ms and --trials must be positive")
    c = DEFAULT_EXPLORATION if args.c is None else args.c
    record = run_throughput(game, args.agent, args.budget_ms,
                            trials=args.trials, seed=args.seed,
                            backend=args.backend, c=c)
    unit = "playouts" if args.agent == "uct" else "expansions"
    print(f"{game.text()} {args.agent}/{record.backend}: "
          f"{record.normalized_mean:.1f} {unit}/s "
          f"+- {record.ci99_half_width:.1f} (99% CI, {record.trials} trials, "
          f"budget {record.budget_s:g}s)")
    if args.out:
        write_bench_csv([record], args.out, invocation=args.invocation)
        print(f"wrote {args.out}")
    return 0


def _parse_agent_spec(raw: str):
    from .agents import DEFAULT_EXPLORATION
    from .bench import AgentSpec

    body, _, opts = raw.partition(":")
    algorithm, _, backend = body.partition("@")
    backend = backend or "native"
    if algorithm not in ("uct", "minimax"):
        raise UsageError(f"bad agent spec {raw!r}: unknown algorithm")
    if backend not in ("native", "embedded", "socket"):
        raise UsageError(f"bad agent spec {raw!r}: unknown backend")
    c = DEFAULT_EXPLORATION
    if opts:
        for item in opts.split(","):
            key, eq, value = item.partition("=")
            if key != "c" or not eq:
                raise UsageError(f"bad agent spec {raw!r}: unknown option {item!r}")
            try:
                c = float(value)
            except ValueError:
                raise UsageError(f"bad agent spec {raw!r}: c must be a number") from None
    return AgentSpec(algorithm=algorithm, backend=backend, c=c)


def _cmd_match(args) -> int:
    from .agents import SearchBudget
    from .bench import run_match
    from .games import parse_game_id
    from .report import ScoreRow, write_score_table

    game = parse_game_id(args.game)
    spec1 = _parse_agent_spec(args.p1)
    spec2 = _parse_agent_spec(args.p2)
    if args.games_count <= 0:
        raise UsageError("--games must be positive")
    if args.iterations is not None:
        if args.iterations <= 0:
            raise UsageError("--iterations must be positive")
        budget = SearchBudget.iterations(args.iterations)
    else:
        budget_ms = 1000 if args.budget_ms is None else args.budget_ms
        if budget_ms <= 0:
            raise UsageError("--budget-ms must be positive")
        budget = SearchBudget.wall(budget_ms)
    result = run_match(game, spec1, spec2, args.games_count, budget,
                       seed=args.seed)
    print(f"{spec1.label()} vs {spec2.label()} on {game.text()}: "
          f"{result.wins}W {result.draws}D {result.losses}L over "
          f"{result.games_played} games, score_avg={result.score_avg:.4f}")
    if args.out:
        row = ScoreRow(player1=spec1.label(), player2=spec2.label(),
                       result=result)
        write_score_table([row], args.out, invocation=args.invocation)
        print(f"wrote {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    from .bench import profile_complexity, run_throughput
    from .bridge.backends import open_session
    from .report import DatasetRow, write_bench_csv, write_dataset_csv
    from .rng import Rng

    plan = load_plan(args.plan)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    seed_stream = Rng(plan.seed)
    records = []
    dataset_rows = []
    sessions = {}
    try:
        for index, game in enumerate(plan.games):
            profile_seed = seed_stream.next_u64()
            prof = profile_complexity(game, playouts=plan.profile_playouts,
                                      seed=profile_seed)
            print(f"[{index + 1}/{len(plan.games)}] {game.text()} "
                  f"d={prof.d:.2f} t={prof.t:.2e} b={prof.b:.2f}",
                  file=sys.stderr, flush=True)
            for algorithm in plan.algorithms:
                for backend in plan.backends:
                    run_seed = seed_stream.next_u64()
                    if backend not in sessions:
                        sessions[backend] = open_session(backend)
                    record = run_throughput(game, algorithm, plan.budget_ms,
                                            trials=plan.trials, seed=run_seed,
                                            backend=backend,
                                            session=sessions[backend])
                    records.append(record)
                    dataset_rows.append(DatasetRow(
                        game_text=game.text(), algorithm=algorithm,
                        backend=backend, d=prof.d, t=prof.t, b=prof.b,
                        target=record.normalized_mean))
    finally:
        for session in sessions.values():
            session.close()

    bench_path = out_dir / "bench.csv"
    data_path = out_dir / "dataset.csv"
    write_bench_csv(records, bench_path, invocation=args.invocation)
    write_dataset_csv(dataset_rows, data_path, invocation=args.invocation)
    print(f"wrote {bench_path} ({len(records)} rows)")
    print(f"wrote {data_path} ({len(dataset_rows)} rows)")
    return 0


_TARGET_ALGORITHM = {"r": "uct", "e": "minimax"}


def _cmd_fit(args) -> int:
    from . import regress
    from .report import (ModelRow, read_dataset_rows, rows_to_dataset,
                         write_model_table)

    rows = read_dataset_rows(args.data)
    algorithm = _TARGET_ALGORITHM[args.target]
    dataset = rows_to_dataset(rows, algorithm)
    features = _csv_list(args.features)
    for name in features:
        if name not in ("d", "t", "b"):
            raise UsageError(f"unknown feature {name!r}")
    if not features:
        raise UsageError("--features must name at least one of d,t,b")
    dataset = dataset.subset(features)
    if not 0 <= args.test_fraction < 1:
        raise UsageError("--test-fraction must be in [0, 1)")
    train, test = regress.split_dataset(dataset, args.test_fraction,
                                        seed=args.seed)
    if args.method == "gd":
        fit = lambda ds, ts=None: regress.fit_gd(ds, test=ts,
                                                 target_name=args.target)
    else:
        fit = lambda ds, ts=None: regress.fit_ols(ds, ts,
                                                  target_name=args.target)
    model = fit(train, test)
    if args.prune:
        model = regress.prune_refit(train, model, fitter=fit, test=test)
    from .report import format_equation

    print(format_equation(model))
    print(f"mse_train={model.mse_train!r}")
    if model.mse_test is not None:
        print(f"mse_test={model.mse_test!r}")
    if model.pruned_all:
        print("note: every term fell under the prune threshold; "
              "kept the largest")
    backends = sorted({row.backend for row in rows if row.algorithm == algorithm})
    backend_label = ",".join(backends)
    if args.out:
        regress.save_model(model, args.out, invocation=args.invocation)
        print(f"wrote {args.out}")
    if args.table:
        write_model_table([ModelRow(algorithm=algorithm, backend=backend_label,
                                    model=model)],
                          args.table, invocation=args.invocation)
        print(f"wrote {args.table}")
    return 0


def _cmd_predict(args) -> int:
    from .regress import load_model, predict_log

    model = load_model(args.model)
    features = {}
    for name in ("d", "t", "b"):
        value = getattr(args, name)
        if value is not None:
            features[name] = value
    try:
        log_value = predict_log(model, features)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    target = model.target_name
    print(f"ln({target}) = {log_value:.3f}")
    print(f"{target} = {math.exp(log_value):.6g}")
    return 0


def _cmd_heatmap(args) -> int:
    from .regress import load_model
    from .report import HeatmapPoint, read_dataset_rows, render_heatmap

    if args.x == args.y:
        raise UsageError("--x and --y must differ")
    model = load_model(args.model)
    rows = read_dataset_rows(args.data)
    algorithm = _TARGET_ALGORITHM.get(model.target_name)
    if algorithm is not None:
        rows = [row for row in rows if row.algorithm == algorithm]
    if not rows:
        raise ValueError("no dataset rows match the model's target")

    def column(name):
        return [getattr(row, name) for row in rows]

    def span(values):
        lo, hi = min(values), max(values)
        if lo >= hi:
            return lo * 0.5, hi * 2.0
        return lo, hi

    x_range = span(column(args.x))
    y_range = span(column(args.y))
    fixed = {}
    for name in model.feature_names:
        if name in (args.x, args.y):
            continue
        values = column(name)
        fixed[name] = math.exp(sum(math.log(v) for v in values) / len(values))
    if args.fixed:
        for item in _csv_list(args.fixed):
            key, eq, value = item.partition("=")
            if not eq or key not in ("d", "t", "b"):
                raise UsageError(f"bad --fixed entry {item!r}")
            try:
                fixed[key] = float(value)
            except ValueError:
                raise UsageError(f"bad --fixed value in {item!r}") from None
    points = [HeatmapPoint(x=getattr(row, args.x), y=getattr(row, args.y),
                           observed=row.target) for row in rows]
    title = args.title or (f"ln({model.target_name}) over "
                           f"{args.x} x {args.y}")
    render_heatmap(model, args.x, args.y, x_range, y_range, points,
                   args.out, fixed=fixed, title=title)
    print(f"wrote {args.out} ({len(points)} observations)")
    return 0


# --- selfcheck ---------------------------------------------------------

def _selfcheck_cases():
    """Fast independent oracles over each layer; yields (name, fn)."""

    def rng_constants():
        from .rng import Rng

        stream = Rng(0)
        assert stream.next_u64() == 0xE220A8397B1DCDAF
        assert stream.next_u64() == 0x6E789E6AA1B965F4

    def ucb1_pinned():
        from .agents import ucb1

        got = ucb1(0.5, 10, 100, math.sqrt(2))
        want = 0.5 + math.sqrt(2) * math.sqrt(math.log(100) / 10)
        assert abs(got - want) < 1e-15

    def tictactoe_draw():
        from .agents import alphabeta_value
        from .games import game_id, new_trial

        assert alphabeta_value(new_trial(game_id("tictactoe"))) == 0.0

    def nim_parity():
        # xor of heap sizes nonzero means the mover wins; classic result
        from .agents import alphabeta_value
        from .games import game_id, new_trial

        for heaps in ((1,), (2, 2), (1, 2, 3), (3, 4), (1, 1, 1)):
            params = {f"h{i + 1}": h for i, h in enumerate(heaps)}
            value = alphabeta_value(new_trial(game_id("nim", **params)))
            xor = 0
            for h in heaps:
                xor ^= h
            assert value == (1.0 if xor else -1.0), heaps

    def frame_example():
        from .bridge.protocol import BridgeMessage, encode_frame

        msg = BridgeMessage.request(1, "is_terminal", {"handle": 7})
        frame = encode_frame(msg)
        assert frame[:4] == b"\x00\x00\x00\x35"
        assert len(frame) == 4 + 53

    def codec_round_trip():
        from .bridge.protocol import (BridgeMessage, decode_frame,
                                      encode_frame)

        for msg in (BridgeMessage.request(2, "playout", {"handle": 1,
                                                         "seed": "123"}),
                    BridgeMessage.ok(2, {"u0": 1.0, "u1": -1.0}),
                    BridgeMessage.fail(3, 2, "no such handle")):
            assert decode_frame(encode_frame(msg)) == msg

    def service_lifecycle():
        from .bridge.protocol import BridgeMessage
        from .bridge.service import EngineService

        service = EngineService()
        reply = service.handle(BridgeMessage.request(
            1, "new_trial", {"game": "nim{h1=2}"}))
        handle = reply.result["handle"]
        reply = service.handle(BridgeMessage.request(
            2, "legal_moves", {"handle": handle}))
        assert reply.result["count"] == 2
        reply = service.handle(BridgeMessage.request(
            3, "release", {"handle": handle}))
        assert reply.result == {}

    def uct_win_in_one():
        from .agents import SearchBudget, uct_select_move
        from .games import apply_move, game_id, new_trial

        # X holds cells 0,1 and O holds 3,4; the winning cell 2 is the
        # first free cell, so it is legal move index 0
        state = new_trial(game_id("tictactoe"))
        for move in (0, 2, 0, 1):
            state = apply_move(state, move)
        result = uct_select_move(state, SearchBudget.iterations(400), seed=11)
        assert result.move_index == 0

    def gd_matches_ols():
        import numpy as np

        from .regress import Dataset, fit_gd, fit_ols

        d = np.array([2.0, 4.0, 8.0, 16.0, 3.0, 5.0])
        t = np.array([0.1, 0.2, 0.05, 0.4, 0.15, 0.3])
        y = np.exp(1.5 - 0.8 * np.log(d) - 0.3 * np.log(t))
        dataset = Dataset(("d", "t"), np.column_stack([d, t]), y)
        a = fit_gd(dataset)
        z = fit_ols(dataset)
        for ca, cz in zip(a.coefficients, z.coefficients):
            assert abs(ca - cz) < 1e-3
        assert abs(a.mse_train - z.mse_train) < 1e-6

    return [
        ("rng constants", rng_constants),
        ("ucb1 pinned value", ucb1_pinned),
        ("tictactoe root is a draw", tictactoe_draw),
        ("nim xor parity", nim_parity),
        ("frame example 53 bytes", frame_example),
        ("codec round trip", codec_round_trip),
        ("service handle lifecycle", service_lifecycle),
        ("uct finds the winning move", uct_win_in_one),
        ("gd matches ols", gd_matches_ols),
    ]


def _cmd_selfcheck(args) -> int:
    failures = 0
    for name, check in _selfcheck_cases():
        try:
            check()
        except Exception as exc:
            failures += 1
            print(f"FAIL {name}: {exc!r}")
        else:
            print(f"ok   {name}")
    if failures:
        print(f"{failures} check(s) failed")
        return 2
    print("all checks passed")
    return 0


_COMMANDS = {
    "games": _cmd_games,
    "profile": _cmd_profile,
    "serve": _cmd_serve,
    "guest": _cmd_guest,
    "bench": _cmd_bench,
    "match": _cmd_match,
    "sweep": _cmd_sweep,
    "fit": _cmd_fit,
    "predict": _cmd_predict,
    "heatmap": _cmd_heatmap,
    "selfcheck": _cmd_selfcheck,
}


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.invocation = "bridgebench " + shlex.join(list(argv))
    try:
        return _COMMANDS[args.command](args)
    except KeyboardInterrupt:
        return 2
    except UsageError as exc:
        print(f"bridgebench: error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"bridgebench: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
