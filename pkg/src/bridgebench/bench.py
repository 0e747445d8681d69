"""Measurement layer: complexity profiles, throughput runs, score matches.

Throughput is always measured on the first move of a fresh trial, and
every record keeps its raw per-trial counts so the statistics can be
re-derived from the artifact.  The per-ply cost t in a complexity
profile is always measured on the native backend, whatever backend the
throughput runs use; it characterizes the game, not the bridge.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

from . import games
from .agents import DEFAULT_EXPLORATION, SearchBudget
from .bridge.backends import open_session
from .games import GameId
from .rng import Rng

Z_VALUES = {0.95: 1.96, 0.99: 2.576}

DEFAULT_TRIALS = 100

# an effort count below this on the probe trial triggers one x10 budget raise
MIN_TRUSTED_COUNT = 20


@dataclass(frozen=True)
class ComplexityProfile:
    """Game-complexity summary pooled over seeded random playouts."""

    d: float          # mean playout length, plies
    t: float          # mean seconds per ply on the native engine
    b: float          # mean branching over visited non-terminal states
    playouts: int

    def features(self) -> dict[str, float]:
        return {"d": self.d, "t": self.t, "b": self.b}


@dataclass(frozen=True)
class BenchRecord:
    game: GameId
    algorithm: str
    backend: str
    budget_s: float
    trials: int
    raw_counts: tuple[int, ...]
    normalized_mean: float
    stddev: float
    ci99_half_width: float


@dataclass(frozen=True)
class ScoreResult:
    games_played: int
    wins: int
    draws: int
    losses: int
    score_avg: float
    per_game: tuple[float, ...]


@dataclass(frozen=True)
class AgentSpec:
    algorithm: str
    backend: str = "native"
    c: float = DEFAULT_EXPLORATION

    def label(self) -> str:
        return f"{self.algorithm}/{self.backend}"


def confidence_interval(samples, level: float = 0.99) -> tuple[float, float]:
    """Mean and z-approximate half-width; a single sample has width 0."""
    if level not in Z_VALUES:
        raise ValueError(f"level must be one of {sorted(Z_VALUES)}")
    n = len(samples)
    if n == 0:
        raise ValueError("no samples")
    mean = sum(samples) / n
    if n == 1:
        return mean, 0.0
    var = sum((x - mean) ** 2 for x in samples) / (n - 1)
    return mean, Z_VALUES[level] * math.sqrt(var) / math.sqrt(n)


def profile_complexity(game: GameId, playouts: int = 200,
                       seed: int = 0) -> ComplexityProfile:
    """Walk seeded random playouts natively, pooling plies, time, branching."""
    if playouts <= 0:
        raise ValueError("playouts must be positive")
    stream = Rng(seed)
    total_plies = 0
    total_time = 0.0
    branch_sum = 0
    branch_states = 0
    for _ in range(playouts):
        playout_rng = Rng(stream.next_u64())
        state = games.new_trial(game)
        start = time.perf_counter()
        while True:
            util = games.terminal_utilities(state)
            if util is not None:
                break
            k = games.legal_moves(state)
            branch_sum += k
            branch_states += 1
            state = games.apply_move(state, playout_rng.next_u64() % k)
            total_plies += 1
        total_time += time.perf_counter() - start
    d = total_plies / playouts
    t = max(total_time / total_plies, 1e-12)
    b = branch_sum / branch_states
    return ComplexityProfile(d=d, t=t, b=b, playouts=playouts)


def run_throughput(game: GameId, algorithm: str, budget_ms: int,
                   trials: int = DEFAULT_TRIALS, seed: int = 0,
                   backend: str = "native", session=None,
                   c: float = DEFAULT_EXPLORATION) -> BenchRecord:
    """Effort counts per wall budget, first move of a fresh trial each time.

    If the probe trial comes back with fewer than 20 counts the budget is
    multiplied by ten, once, and every recorded trial uses the new one.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    own_session = session is None
    if own_session:
        session = open_session(backend)
    try:
        budget_ms = _calibrate_budget(session, game, algorithm, budget_ms, seed, c)
        stream = Rng(seed)
        counts = []
        for _ in range(trials):
            trial_seed = stream.next_u64()
            counts.append(_one_trial(session, game, algorithm, budget_ms,
                                     trial_seed, c))
    finally:
        if own_session:
            session.close()
    budget_s = budget_ms / 1000.0
    normalized = [raw / budget_s for raw in counts]
    mean, ci99 = confidence_interval(normalized, 0.99)
    if len(normalized) > 1:
        var = sum((x - mean) ** 2 for x in normalized) / (len(normalized) - 1)
        stddev = math.sqrt(var)
    else:
        stddev = 0.0
    return BenchRecord(game=game, algorithm=algorithm, backend=session.backend,
                       budget_s=budget_s, trials=trials,
                       raw_counts=tuple(counts), normalized_mean=mean,
                       stddev=stddev, ci99_half_width=ci99)


def _one_trial(session, game, algorithm, budget_ms, trial_seed, c) -> int:
    handle = session.new_trial(game)
    try:
        result = session.select_move(algorithm, handle,
                                     SearchBudget.wall(budget_ms),
                                     seed=trial_seed, c=c)
        return result.effort
    finally:
        session.release(handle)


def _calibrate_budget(session, game, algorithm, budget_ms, seed, c) -> int:
    probe = _one_trial(session, game, algorithm, budget_ms, Rng(seed).next_u64(), c)
    if probe < MIN_TRUSTED_COUNT:
        return budget_ms * 10
    return budget_ms


def run_match(game: GameId, agent1: AgentSpec, agent2: AgentSpec,
              games_count: int, budget: SearchBudget, seed: int = 0,
              mirror_seeds: bool = True) -> ScoreResult:
    """Head-to-head score for agent1: win 1, draw 0.5, per the usual count.

    The starting seat alternates every game.  With mirror_seeds, games
    2i and 2i+1 share their per-move seed stream, so a pair played by
    identical agents is the same game with seats swapped.
    """
    if games_count <= 0:
        raise ValueError("games_count must be positive")
    sessions = {}
    for spec in (agent1, agent2):
        if spec.backend not in sessions:
            sessions[spec.backend] = open_session(spec.backend)
    pair_stream = Rng(seed)
    per_game = []
    wins = draws = losses = 0
    try:
        game_seed = None
        for g in range(games_count):
            if game_seed is None or not mirror_seeds or g % 2 == 0:
                game_seed = pair_stream.next_u64()
            seat_of_agent1 = g % 2
            score = _play_one_game(game, (agent1, agent2), sessions,
                                   seat_of_agent1, budget, game_seed)
            per_game.append(score)
            if score == 1.0:
                wins += 1
            elif score == 0.0:
                losses += 1
            else:
                draws += 1
    finally:
        for s in sessions.values():
            s.close()
    avg = (wins + 0.5 * draws) / games_count
    return ScoreResult(games_played=games_count, wins=wins, draws=draws,
                       losses=losses, score_avg=avg, per_game=tuple(per_game))


def _play_one_game(game, specs, sessions, seat_of_agent1, budget,
                   game_seed) -> float:
    state = games.new_trial(game)
    move_stream = Rng(game_seed)
    # each agent session mirrors the game on its own handle
    handles = {}
    for spec in specs:
        session = sessions[spec.backend]
        handles[id(spec)] = (session, session.new_trial(game))
    try:
        while not games.is_terminal(state):
            seat = state.mover
            spec = specs[0] if seat == seat_of_agent1 else specs[1]
            session, handle = handles[id(spec)]
            move_seed = move_stream.next_u64()
            res = session.select_move(spec.algorithm, handle, budget,
                                      seed=move_seed, c=spec.c)
            move = res.move_index
            state = games.apply_move(state, move)
            for other_session, other_handle in handles.values():
                other_session.apply(other_handle, move)
        u0, u1 = games.returns(state)
        u_agent1 = u0 if seat_of_agent1 == 0 else u1
        return (u_agent1 + 1.0) / 2.0
    finally:
        for session, handle in handles.values():
            session.release(handle)
