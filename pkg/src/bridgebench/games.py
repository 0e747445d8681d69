"""Game engine: four families behind one move-index interface.

All state is immutable.  A move is always addressed by its index into
the current legal-move list, whose order is canonical per family, so a
sequence of indices fully determines a playthrough on any runtime.

Families:

* ``synthetic{branching,depth[,cost_knob,gen_cost,salt]}``: a uniform
  tree with tunable per-move generation cost and per-apply update cost.
  Leaf utilities are derived from a running path hash.
* ``tictactoe``: 3x3, standard rules.
* ``nim{h1,...,hN}``: take any positive count from one heap, last taker
  wins.
* ``breakthrough{size}``: pawns-only race, two starting rows per side,
  reaching the far row (or erasing the opponent) wins.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .rng import MASK64, Rng, burn, hash_step, sm64_next


class InvalidGameError(ValueError):
    """Unknown family name or malformed parameters."""


class IllegalMoveError(ValueError):
    """Move index outside the current legal-move list."""


class NotTerminalError(ValueError):
    """Utilities requested from a live position."""


_NAME_RE = re.compile(r"^([a-z_]+)(\{(.*)\})?$")
_NIM_KEY_RE = re.compile(r"^h([1-9][0-9]*)$")

# synthetic move generation always materializes each move at this unit
# cost unless gen_cost overrides it
DEFAULT_GEN_COST = 16

_BREAKTHROUGH_DEFAULT_SIZE = 5


def _param_sort_key(key: str):
    m = re.match(r"^([a-z_]+?)([0-9]+)$", key)
    if m:
        return m.group(1), int(m.group(2))
    return key, -1


def _validate_params(name: str, params: dict[str, int]) -> None:
    for key, value in params.items():
        if not isinstance(value, int) or isinstance(value, bool):
            raise InvalidGameError(f"param {key!r} must be an integer")
        if value <= 0:
            raise InvalidGameError(f"param {key!r} must be positive, got {value}")
    if name == "synthetic":
        allowed = {"branching", "depth", "cost_knob", "gen_cost", "salt"}
        unknown = set(params) - allowed
        if unknown:
            raise InvalidGameError(f"synthetic: unknown params {sorted(unknown)}")
        for req in ("branching", "depth"):
            if req not in params:
                raise InvalidGameError(f"synthetic: missing required param {req!r}")
    elif name == "tictactoe":
        if params:
            raise InvalidGameError("tictactoe takes no params")
    elif name == "nim":
        if not params:
            raise InvalidGameError("nim needs at least one heap, e.g. nim{h1=3}")
        indices = set()
        for key in params:
            m = _NIM_KEY_RE.match(key)
            if not m:
                raise InvalidGameError(f"nim: bad heap key {key!r}, expected h1..hN")
            indices.add(int(m.group(1)))
        if indices != set(range(1, len(params) + 1)):
            raise InvalidGameError("nim: heap keys must be h1..hN with no gaps")
    elif name == "breakthrough":
        unknown = set(params) - {"size"}
        if unknown:
            raise InvalidGameError(f"breakthrough: unknown params {sorted(unknown)}")
        if params.get("size", _BREAKTHROUGH_DEFAULT_SIZE) < 4:
            raise InvalidGameError("breakthrough: size must be at least 4")
    else:
        raise InvalidGameError(f"unknown game name {name!r}")


@dataclass(frozen=True)
class GameId:
    """A fully specified game instance: family name plus integer params."""

    name: str
    params: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        pdict = dict(self.params)
        if len(pdict) != len(self.params):
            raise InvalidGameError("duplicate param key")
        _validate_params(self.name, pdict)
        ordered = tuple(sorted(pdict.items(), key=lambda kv: _param_sort_key(kv[0])))
        object.__setattr__(self, "params", ordered)
        object.__setattr__(self, "_pdict", pdict)

    def param(self, key: str, default: int = 0) -> int:
        return self._pdict.get(key, default)

    def text(self) -> str:
        if not self.params:
            return self.name
        inner = ",".join(f"{k}={v}" for k, v in self.params)
        return f"{self.name}{{{inner}}}"


def game_id(name: str, **params: int) -> GameId:
    return GameId(name, tuple(params.items()))


def parse_game_id(text: str) -> GameId:
    """Parse the CLI text form ``name`` or ``name{key=value,...}``."""
    m = _NAME_RE.match(text.strip())
    if not m:
        raise InvalidGameError(f"cannot parse game spec {text!r}")
    name, body = m.group(1), m.group(3)
    params: dict[str, int] = {}
    if body is not None and body.strip():
        for part in body.split(","):
            if "=" not in part:
                raise InvalidGameError(f"bad param {part!r} in {text!r}")
            key, _, raw = part.partition("=")
            key = key.strip()
            try:
                value = int(raw.strip())
            except ValueError:
                raise InvalidGameError(f"param {key!r} must be an integer") from None
            if key in params:
                raise InvalidGameError(f"duplicate param {key!r}")
            params[key] = value
    return GameId(name, tuple(params.items()))


@dataclass(frozen=True, slots=True)
class GameState:
    """Immutable position: family-specific payload plus whose turn it is."""

    game: GameId
    position: object
    mover: int
    ply_count: int


# --- synthetic ---------------------------------------------------------
#
# position payload: the running path hash (int).  The root hash is one
# generator output seeded by salt; each move folds its 1-based index in.
# Leaf utility: hash % 4 == 0 is a draw, otherwise odd hashes favor
# player 0 and even ones player 1.


def _syn_new(game: GameId) -> GameState:
    _, h = sm64_next(game.param("salt", 0))
    return GameState(game, h, 0, 0)


def _syn_move_count(s: GameState) -> int:
    game = s.game
    if s.ply_count >= game.param("depth"):
        return 0
    k = game.param("branching")
    # materialization cost: gen_cost work units per legal move
    h = s.position
    units = game.param("gen_cost", DEFAULT_GEN_COST)
    for i in range(1, k + 1):
        burn((h ^ i) & MASK64, units)
    return k


def _syn_apply(s: GameState, i: int) -> GameState:
    h = hash_step(s.position, i + 1)
    cost = s.game.param("cost_knob", 0)
    if cost:
        burn(h, cost)
    return GameState(s.game, h, 1 - s.mover, s.ply_count + 1)


def _syn_terminal(s: GameState):
    if s.ply_count < s.game.param("depth"):
        return None
    h = s.position
    if h % 4 == 0:
        return (0.0, 0.0)
    if h & 1:
        return (1.0, -1.0)
    return (-1.0, 1.0)


# --- tictactoe ---------------------------------------------------------

_TTT_LINES = ((0, 1, 2), (3, 4, 5), (6, 7, 8),
              (0, 3, 6), (1, 4, 7), (2, 5, 8),
              (0, 4, 8), (2, 4, 6))


def _ttt_new(game: GameId) -> GameState:
    return GameState(game, (-1,) * 9, 0, 0)


def _ttt_terminal(s: GameState):
    cells = s.position
    for a, b, c in _TTT_LINES:
        v = cells[a]
        if v >= 0 and v == cells[b] and v == cells[c]:
            return (1.0, -1.0) if v == 0 else (-1.0, 1.0)
    if -1 not in cells:
        return (0.0, 0.0)
    return None


def _ttt_move_count(s: GameState) -> int:
    if _ttt_terminal(s) is not None:
        return 0
    return s.position.count(-1)


def _ttt_apply(s: GameState, i: int) -> GameState:
    cells = s.position
    seen = 0
    for cell in range(9):
        if cells[cell] == -1:
            if seen == i:
                new = cells[:cell] + (s.mover,) + cells[cell + 1:]
                return GameState(s.game, new, 1 - s.mover, s.ply_count + 1)
            seen += 1
    raise AssertionError("index checked by caller")


# --- nim ---------------------------------------------------------------
#
# legal moves ordered heap-ascending then take-count ascending; the side
# facing all-empty heaps has lost.


def _nim_new(game: GameId) -> GameState:
    heaps = tuple(v for _, v in game.params)
    return GameState(game, heaps, 0, 0)


def _nim_move_count(s: GameState) -> int:
    return sum(s.position)


def _nim_apply(s: GameState, i: int) -> GameState:
    heaps = s.position
    for j, size in enumerate(heaps):
        if i < size:
            take = i + 1
            new = heaps[:j] + (size - take,) + heaps[j + 1:]
            return GameState(s.game, new, 1 - s.mover, s.ply_count + 1)
        i -= size
    raise AssertionError("index checked by caller")


def _nim_terminal(s: GameState):
    if any(s.position):
        return None
    return (-1.0, 1.0) if s.mover == 0 else (1.0, -1.0)


# --- breakthrough ------------------------------------------------------
#
# player 0 starts on rows 0..1 heading up, player 1 mirrored.  Straight
# steps need an empty target; diagonal steps may capture.  A side with
# no pawns or no moves loses.


def _bt_size(game: GameId) -> int:
    return game.param("size", _BREAKTHROUGH_DEFAULT_SIZE)


def _bt_new(game: GameId) -> GameState:
    n = _bt_size(game)
    cells = [-1] * (n * n)
    for col in range(n):
        cells[col] = cells[n + col] = 0
        cells[(n - 2) * n + col] = cells[(n - 1) * n + col] = 1
    return GameState(game, tuple(cells), 0, 0)


def _bt_moves(s: GameState) -> list[tuple[int, int]]:
    n = _bt_size(s.game)
    cells = s.position
    mover = s.mover
    step = n if mover == 0 else -n
    out = []
    for cell in range(n * n):
        if cells[cell] != mover:
            continue
        row, col = divmod(cell, n)
        target_row = row + (1 if mover == 0 else -1)
        if not 0 <= target_row < n:
            continue
        for dc in (-1, 0, 1):
            tc = col + dc
            if not 0 <= tc < n:
                continue
            target = cell + step + dc
            occupant = cells[target]
            if dc == 0:
                if occupant == -1:
                    out.append((cell, target))
            elif occupant != mover:
                out.append((cell, target))
    return out


def _bt_terminal(s: GameState):
    n = _bt_size(s.game)
    cells = s.position
    if 0 in cells[(n - 1) * n:]:
        return (1.0, -1.0)
    if 1 in cells[:n]:
        return (-1.0, 1.0)
    if s.mover not in cells or not _bt_moves(s):
        return (-1.0, 1.0) if s.mover == 0 else (1.0, -1.0)
    return None


def _bt_move_count(s: GameState) -> int:
    if _bt_terminal(s) is not None:
        return 0
    return len(_bt_moves(s))


def _bt_apply(s: GameState, i: int) -> GameState:
    src, dst = _bt_moves(s)[i]
    cells = list(s.position)
    cells[src] = -1
    cells[dst] = s.mover
    return GameState(s.game, tuple(cells), 1 - s.mover, s.ply_count + 1)


# --- dispatch ----------------------------------------------------------

_NEW = {"synthetic": _syn_new, "tictactoe": _ttt_new,
        "nim": _nim_new, "breakthrough": _bt_new}
_COUNT = {"synthetic": _syn_move_count, "tictactoe": _ttt_move_count,
          "nim": _nim_move_count, "breakthrough": _bt_move_count}
_APPLY = {"synthetic": _syn_apply, "tictactoe": _ttt_apply,
          "nim": _nim_apply, "breakthrough": _bt_apply}
_TERMINAL = {"synthetic": _syn_terminal, "tictactoe": _ttt_terminal,
             "nim": _nim_terminal, "breakthrough": _bt_terminal}


def new_trial(game: GameId) -> GameState:
    """Fresh start position; the first mover is always player 0."""
    return _NEW[game.name](game)


def legal_moves(s: GameState) -> int:
    """Number of legal moves k; moves are addressed as 0..k-1."""
    return _COUNT[s.game.name](s)


def apply_move(s: GameState, move_index: int) -> GameState:
    k = _COUNT[s.game.name](s)
    if not 0 <= move_index < k:
        raise IllegalMoveError(
            f"move {move_index} out of range for {k} legal moves")
    return _APPLY[s.game.name](s, move_index)


def terminal_utilities(s: GameState):
    """(u0, u1) if s is terminal, else None.  Cheap; safe on hot paths."""
    return _TERMINAL[s.game.name](s)


def is_terminal(s: GameState) -> bool:
    return _TERMINAL[s.game.name](s) is not None


def returns(s: GameState) -> tuple[float, float]:
    util = _TERMINAL[s.game.name](s)
    if util is None:
        raise NotTerminalError("returns requested from a non-terminal state")
    return util


def ply_bound(s: GameState) -> int:
    """Hard upper bound on remaining plies from s; playouts assert it."""
    name = s.game.name
    if name == "synthetic":
        return s.game.param("depth") - s.ply_count
    if name == "tictactoe":
        return s.position.count(-1)
    if name == "nim":
        return sum(s.position)
    n = _bt_size(s.game)
    return 10 * n * n


def random_playout(s: GameState, seed: int) -> tuple[tuple[float, float], int]:
    """Uniform-random playout from a copy of s.

    Moves are drawn as next_u64() mod k from a fresh stream seeded with
    seed.  Returns the terminal (u0, u1) and the number of plies played.
    The caller's state is untouched.
    """
    rng = Rng(seed)
    cur = s
    plies = 0
    bound = ply_bound(s)
    terminal = _TERMINAL[s.game.name]
    count = _COUNT[s.game.name]
    apply_fn = _APPLY[s.game.name]
    while True:
        util = terminal(cur)
        if util is not None:
            return util, plies
        k = count(cur)
        cur = apply_fn(cur, rng.next_u64() % k)
        plies += 1
        assert plies <= bound, "playout exceeded the family's ply bound"
