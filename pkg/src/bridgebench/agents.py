"""Search agents: UCT and anytime alpha-beta, both fully deterministic.

Both agents carry an effort counter (playouts for UCT, expansions for
alpha-beta) so that throughput can be compared across execution backends
without trusting wall clocks alone.  Under an iteration budget neither
agent ever reads a clock, which is what makes cross-runtime replays
bit-identical.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

from .games import GameState, apply_move, legal_moves, random_playout, terminal_utilities
from .rng import Rng

DEFAULT_EXPLORATION = math.sqrt(2.0)


@dataclass(frozen=True)
class SearchBudget:
    """Exactly one of wall_ms or max_iterations must be set."""

    wall_ms: int | None = None
    max_iterations: int | None = None

    def __post_init__(self):
        set_fields = [f for f in (self.wall_ms, self.max_iterations) if f is not None]
        if len(set_fields) != 1:
            raise ValueError("budget needs exactly one of wall_ms or max_iterations")
        if set_fields[0] <= 0:
            raise ValueError("budget must be positive")

    @classmethod
    def wall(cls, ms: int) -> "SearchBudget":
        return cls(wall_ms=ms)

    @classmethod
    def iterations(cls, n: int) -> "SearchBudget":
        return cls(max_iterations=n)

    @property
    def seconds(self) -> float | None:
        return None if self.wall_ms is None else self.wall_ms / 1000.0


@dataclass(frozen=True)
class SearchResult:
    move_index: int
    elapsed: float
    playouts: int | None = None
    expansions: int | None = None

    def decision(self) -> tuple:
        """The backend-invariant part: move plus effort counter."""
        return (self.move_index, self.playouts, self.expansions)

    @property
    def effort(self) -> int:
        return self.playouts if self.playouts is not None else self.expansions


def ucb1(mean: float, child_visits: int, parent_visits: int,
         c: float = DEFAULT_EXPLORATION) -> float:
    """Upper confidence bound; an unvisited child is infinitely urgent."""
    if child_visits == 0:
        return math.inf
    return mean + c * math.sqrt(math.log(parent_visits) / child_visits)


class UctNode:
    """One tree node.  children[i] always plays move index i, so sequential
    expansion keeps list position and move index identical."""

    __slots__ = ("state", "k", "children", "visits", "reward_sum")

    def __init__(self, state: GameState):
        self.state = state
        self.k = legal_moves(state)
        self.children: list[UctNode] = []
        self.visits = 0
        self.reward_sum = 0.0

    @property
    def unexpanded(self) -> int:
        return self.k - len(self.children)

    def mean(self) -> float:
        return self.reward_sum / self.visits if self.visits else 0.0


def _select_child(node: UctNode, c: float) -> UctNode:
    """Argmax of ucb1 over children; ties break toward the lowest index."""
    best = None
    best_score = -math.inf
    log_n = None
    for child in node.children:
        v = child.visits
        if v == 0:
            return child  # infinite score, first such child wins the tie
        if log_n is None:
            log_n = math.log(node.visits)
        score = child.reward_sum / v + c * math.sqrt(log_n / v)
        if score > best_score:
            best_score = score
            best = child
    return best


def uct_select_move(state: GameState, budget: SearchBudget, seed: int,
                    c: float = DEFAULT_EXPLORATION) -> SearchResult:
    """UCT with one playout per iteration and robust-child final choice.

    The root is fully expanded before the first iteration.  Each
    iteration draws its playout seed from a SplitMix64 stream seeded
    with `seed` before descending, so iteration N sees the same seed on
    every backend and runtime.
    """
    start = time.perf_counter()
    root = UctNode(state)
    if root.k == 0:
        raise ValueError("cannot search a terminal state")
    for i in range(root.k):
        root.children.append(UctNode(apply_move(state, i)))
    stream = Rng(seed)

    def one_iteration():
        seed_i = stream.next_u64()
        node = root
        path = [root]
        while True:
            if node.k == 0:
                break  # terminal: play out right here (zero plies)
            if len(node.children) == node.k:
                node = _select_child(node, c)
                path.append(node)
                continue
            child = UctNode(apply_move(node.state, len(node.children)))
            node.children.append(child)
            node = child
            path.append(node)
            break
        (u0, u1), _ = random_playout(node.state, seed_i)
        for visited in path:
            visited.visits += 1
            # credit the player who moved into this node
            if visited.state.mover == 1:
                visited.reward_sum += (u0 + 1.0) * 0.5
            else:
                visited.reward_sum += (u1 + 1.0) * 0.5

    if budget.max_iterations is not None:
        for _ in range(budget.max_iterations):
            one_iteration()
    else:
        deadline = start + budget.wall_ms / 1000.0
        while time.perf_counter() < deadline:
            one_iteration()

    best_i, best_visits = 0, -1
    for i, child in enumerate(root.children):
        if child.visits > best_visits:
            best_i, best_visits = i, child.visits
    return SearchResult(move_index=best_i, elapsed=time.perf_counter() - start,
                        playouts=root.visits)


class Deadline:
    """Wall-clock or expansion-count cutoff for the anytime searcher."""

    __slots__ = ("until", "cap")

    def __init__(self, until: float | None = None, cap: int | None = None):
        self.until = until
        self.cap = cap

    @classmethod
    def from_budget(cls, budget: SearchBudget, start: float) -> "Deadline":
        if budget.wall_ms is not None:
            return cls(until=start + budget.wall_ms / 1000.0)
        return cls(cap=budget.max_iterations)

    def expired(self, expansions: int) -> bool:
        if self.cap is not None and expansions >= self.cap:
            return True
        if self.until is not None and time.perf_counter() >= self.until:
            return True
        return False


class _Counter:
    __slots__ = ("expansions",)

    def __init__(self):
        self.expansions = 0


def alphabeta_value(state: GameState, alpha: float = -math.inf,
                    beta: float = math.inf, deadline: Deadline | None = None,
                    counter: _Counter | None = None) -> float:
    """Fail-soft negamax value of state for the side to move.

    No heuristic: a subtree cut off by the deadline contributes the draw
    value 0.  Terminal states always return their exact utility, even
    after the deadline.  Children are visited in legal-move order with
    no reordering; one expansion is one legal-move-list generation at a
    non-terminal node.
    """
    util = terminal_utilities(state)
    if util is not None:
        return util[state.mover]
    if deadline is not None and deadline.expired(counter.expansions):
        return 0.0
    if counter is not None:
        counter.expansions += 1
    k = legal_moves(state)
    best = -math.inf
    for i in range(k):
        v = -alphabeta_value(apply_move(state, i), -beta, -alpha,
                             deadline, counter)
        if v > best:
            best = v
        if v > alpha:
            alpha = v
        if alpha >= beta:
            break
    return best


def minimax_select_move(state: GameState, budget: SearchBudget,
                        seed: int = 0) -> SearchResult:
    """Anytime root driver over alphabeta_value.

    Root children are evaluated left to right in legal order.  When the
    budget runs out, children not yet reached count as draws, and the
    argmax keeps the lowest index on ties.  `seed` is accepted for
    interface symmetry and never used.
    """
    del seed
    start = time.perf_counter()
    k = legal_moves(state)
    if k == 0:
        raise ValueError("cannot search a terminal state")
    deadline = Deadline.from_budget(budget, start)
    counter = _Counter()
    counter.expansions = 1  # the root's own move list, generated above
    best_i = 0
    best_v = -math.inf
    alpha = -math.inf
    for i in range(k):
        if deadline.expired(counter.expansions):
            v = 0.0
        else:
            v = -alphabeta_value(apply_move(state, i), -math.inf, -alpha,
                                 deadline, counter)
        if v > best_v:
            best_v = v
            best_i = i
        if v > alpha:
            alpha = v
    return SearchResult(move_index=best_i, elapsed=time.perf_counter() - start,
                        expansions=counter.expansions)
