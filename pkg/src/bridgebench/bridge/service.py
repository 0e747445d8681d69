"""Host-side engine service: games addressed through integer handles.

The service owns the only mutable stores in the bridge: a handle table
mapping integers to engine states and a per-method call counter.  Every
request bumps its method's counter, success or not, so counters are
monotone and backend comparisons can rely on them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .. import games
from ..games import (
    GameState, IllegalMoveError, InvalidGameError, NotTerminalError,
)
from .protocol import (
    ERR_BAD_HANDLE, ERR_BAD_PARAMS, ERR_ILLEGAL_MOVE, ERR_INTERNAL,
    ERR_NOT_TERMINAL, ERR_UNKNOWN_METHOD, BridgeMessage, FrameError,
    seed_from_wire,
)


class ServiceError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class HandleTable:
    """Integer handles for engine states; ids are never reused."""

    entries: dict[int, GameState] = field(default_factory=dict)
    next_handle: int = 1

    def put(self, state: GameState) -> int:
        handle = self.next_handle
        self.next_handle += 1
        self.entries[handle] = state
        return handle

    def get(self, handle) -> GameState:
        if not isinstance(handle, int) or isinstance(handle, bool):
            raise ServiceError(ERR_BAD_PARAMS, "handle must be an integer")
        try:
            return self.entries[handle]
        except KeyError:
            raise ServiceError(ERR_BAD_HANDLE, f"no live handle {handle}") from None

    def rebind(self, handle: int, state: GameState) -> None:
        self.entries[handle] = state

    def pop(self, handle) -> None:
        self.get(handle)
        del self.entries[handle]

    def live(self) -> int:
        return len(self.entries)


@dataclass
class CallCounters:
    counts: dict[str, int] = field(default_factory=dict)

    def bump(self, method: str) -> None:
        self.counts[method] = self.counts.get(method, 0) + 1

    def snapshot(self) -> dict[str, int]:
        return dict(self.counts)


class EngineService:
    """Dispatch bridge requests against a handle table.

    handle() never raises: every failure becomes an error response with
    one of the documented codes.
    """

    def __init__(self, allowed_games=None):
        self.table = HandleTable()
        self.counters = CallCounters()
        # names or full id texts; None serves everything
        self.allowed_games = tuple(allowed_games) if allowed_games else None

    # -- request plumbing ---------------------------------------------

    def handle(self, request: BridgeMessage) -> BridgeMessage:
        if not request.is_request():
            return BridgeMessage.fail(request.id, ERR_BAD_PARAMS,
                                      "expected a request frame")
        method = request.method
        handler = getattr(self, f"_do_{method}", None)
        if handler is None:
            return BridgeMessage.fail(request.id, ERR_UNKNOWN_METHOD,
                                      f"unknown method {method!r}")
        self.counters.bump(method)
        try:
            return BridgeMessage.ok(request.id, handler(request.params))
        except ServiceError as exc:
            return BridgeMessage.fail(request.id, exc.code, str(exc))
        except InvalidGameError as exc:
            return BridgeMessage.fail(request.id, ERR_BAD_PARAMS, str(exc))
        except IllegalMoveError as exc:
            return BridgeMessage.fail(request.id, ERR_ILLEGAL_MOVE, str(exc))
        except NotTerminalError as exc:
            return BridgeMessage.fail(request.id, ERR_NOT_TERMINAL, str(exc))
        except FrameError as exc:
            return BridgeMessage.fail(request.id, ERR_BAD_PARAMS, str(exc))
        except Exception as exc:  # pragma: no cover - safety net
            return BridgeMessage.fail(request.id, ERR_INTERNAL,
                                      f"{type(exc).__name__}: {exc}")

    def _state(self, params: dict) -> GameState:
        return self.table.get(params.get("handle"))

    @staticmethod
    def _move_index(params: dict) -> int:
        move = params.get("move")
        if not isinstance(move, int) or isinstance(move, bool):
            raise ServiceError(ERR_BAD_PARAMS, "move must be an integer")
        return move

    # -- methods ------------------------------------------------------

    def _do_new_trial(self, params: dict) -> dict:
        text = params.get("game")
        if not isinstance(text, str):
            raise ServiceError(ERR_BAD_PARAMS, "new_trial needs a game string")
        gid = games.parse_game_id(text)
        if (self.allowed_games is not None
                and gid.name not in self.allowed_games
                and gid.text() not in self.allowed_games):
            raise ServiceError(ERR_BAD_PARAMS,
                               f"game {gid.text()!r} is not served here")
        state = games.new_trial(gid)
        return {"handle": self.table.put(state)}

    def _do_copy(self, params: dict) -> dict:
        return {"handle": self.table.put(self._state(params))}

    def _do_apply(self, params: dict) -> dict:
        state = self._state(params)
        move = self._move_index(params)
        self.table.rebind(params["handle"], games.apply_move(state, move))
        return {}

    def _do_legal_moves(self, params: dict) -> dict:
        return {"count": games.legal_moves(self._state(params))}

    def _do_is_terminal(self, params: dict) -> dict:
        return {"terminal": games.is_terminal(self._state(params))}

    def _do_returns(self, params: dict) -> dict:
        return {"utilities": list(games.returns(self._state(params)))}

    def _do_current_player(self, params: dict) -> dict:
        return {"player": self._state(params).mover}

    def _do_playout(self, params: dict) -> dict:
        state = self._state(params)
        seed = seed_from_wire(params.get("seed"))
        utilities, plies = games.random_playout(state, seed)
        return {"utilities": list(utilities), "plies": plies}

    def _do_release(self, params: dict) -> dict:
        self.table.pop(params.get("handle"))
        return {}

    def _do_engine_stats(self, params: dict) -> dict:
        return {"live_handles": self.table.live(),
                "calls": self.counters.snapshot()}
