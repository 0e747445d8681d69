"""Uniform sessions over the three execution backends.

A session hands out engine handles and runs select_move against them;
callers cannot tell the backends apart except by the clock.

* native: agent and engine in this process, plain function calls.
* socket: agent in a separate guest process, every engine call a framed
  round trip over loopback TCP.
* embedded: agent in a foreign runtime that hosts the engine inside its
  own process; only trial orchestration crosses a pipe, engine calls
  stay in-process.  Available once the guest component is built; the
  launch command comes from BRIDGEBENCH_EMBED_CMD.
"""

from __future__ import annotations

import os
import select
import shlex
import subprocess
import sys

from ..agents import (
    DEFAULT_EXPLORATION, SearchBudget, SearchResult, minimax_select_move,
    uct_select_move,
)
from ..games import GameId, parse_game_id
from .protocol import (
    BridgeMessage, FrameError, PROTOCOL_VERSION, read_frame, seed_to_wire,
    write_frame,
)
from .server import BridgeServer, GuestProtocolError, GuestTimeoutError
from .service import HandleTable

BACKENDS = ("native", "embedded", "socket")

ALGORITHMS = ("uct", "minimax")

EMBED_CMD_VAR = "BRIDGEBENCH_EMBED_CMD"

# a guest gets ten times its search budget before the host gives up on it
GUEST_PATIENCE = 10.0
_ITERATION_CALL_TIMEOUT = 600.0


class BackendUnavailableError(RuntimeError):
    pass


def _budget_wire(budget: SearchBudget) -> dict:
    if budget.wall_ms is not None:
        return {"wall_ms": budget.wall_ms}
    return {"max_iterations": budget.max_iterations}


def _call_timeout(budget: SearchBudget) -> float:
    if budget.wall_ms is not None:
        return max(GUEST_PATIENCE * budget.wall_ms / 1000.0, 5.0)
    return _ITERATION_CALL_TIMEOUT


def _to_result(raw: dict) -> SearchResult:
    return SearchResult(move_index=raw["move_index"],
                        elapsed=float(raw.get("elapsed", 0.0)),
                        playouts=raw.get("playouts"),
                        expansions=raw.get("expansions"))


def _game_text(game: GameId | str) -> str:
    if isinstance(game, str):
        return parse_game_id(game).text()
    return game.text()


class NativeSession:
    """Handles over an in-process table; select_move calls the agents."""

    backend = "native"

    def __init__(self):
        from .. import games
        self._games = games
        self.table = HandleTable()

    def new_trial(self, game: GameId | str) -> int:
        return self.table.put(self._games.new_trial(parse_game_id(_game_text(game))))

    def apply(self, handle: int, move: int) -> None:
        self.table.rebind(handle, self._games.apply_move(self.table.get(handle), move))

    def select_move(self, algorithm: str, handle: int, budget: SearchBudget,
                    seed: int = 0, c: float = DEFAULT_EXPLORATION) -> SearchResult:
        state = self.table.get(handle)
        if algorithm == "uct":
            return uct_select_move(state, budget, seed, c)
        if algorithm == "minimax":
            return minimax_select_move(state, budget, seed)
        raise ValueError(f"unknown algorithm {algorithm!r}")

    def release(self, handle: int) -> None:
        self.table.pop(handle)

    def stats(self) -> dict:
        return {"live_handles": self.table.live(), "calls": {}}

    def close(self) -> None:
        self.table.entries.clear()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class SocketSession:
    """Server plus guest subprocess; engine calls cross loopback TCP.

    A custom guest_cmd gets ``--host H --port P`` appended; the default
    guest is this package's reference guest.
    """

    backend = "socket"

    def __init__(self, guest_cmd: list[str] | None = None,
                 host: str = "127.0.0.1", attach_timeout: float = 20.0):
        self.server = BridgeServer(host, 0).start()
        base = guest_cmd or [sys.executable, "-m", "bridgebench.cli", "guest"]
        cmd = list(base) + ["--host", host, "--port", str(self.server.port)]
        self.proc = subprocess.Popen(cmd, stdin=subprocess.DEVNULL)
        try:
            self.server.wait_for_guest(attach_timeout)
        except GuestTimeoutError:
            self.close()
            raise

    def new_trial(self, game: GameId | str) -> int:
        return self.server.host_call("new_trial", {"game": _game_text(game)})["handle"]

    def apply(self, handle: int, move: int) -> None:
        self.server.host_call("apply", {"handle": handle, "move": move})

    def select_move(self, algorithm: str, handle: int, budget: SearchBudget,
                    seed: int = 0, c: float = DEFAULT_EXPLORATION) -> SearchResult:
        params = {"handle": handle, "algorithm": algorithm,
                  "budget": _budget_wire(budget), "seed": seed_to_wire(seed),
                  "c": c}
        try:
            raw = self.server.control_call("select_move", params,
                                           timeout=_call_timeout(budget))
        except GuestTimeoutError:
            self._kill()
            self.server.drain()
            raise
        return _to_result(raw)

    def release(self, handle: int) -> None:
        self.server.host_call("release", {"handle": handle})

    def stats(self) -> dict:
        return self.server.host_call("engine_stats", {})

    def _kill(self) -> None:
        if self.proc.poll() is None:
            self.proc.kill()
            self.proc.wait(timeout=5.0)

    def close(self) -> None:
        try:
            if self.proc.poll() is None and self.server._control_ready.is_set():
                self.server.control_call("shutdown", {}, timeout=5.0)
                self.proc.wait(timeout=5.0)
        except (GuestProtocolError, subprocess.TimeoutExpired):
            pass
        finally:
            self._kill()
            self.server.stop()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class EmbeddedSession:
    """Guest process that hosts the engine in-process; frames over stdio.

    The pipe carries one request per trial operation (new_trial,
    select_move, stats), never per engine call, so its cost stays out of
    the measured search.
    """

    backend = "embedded"

    def __init__(self, cmd: list[str] | None = None):
        if cmd is None:
            raw = os.environ.get(EMBED_CMD_VAR, "").strip()
            if not raw:
                raise BackendUnavailableError(
                    "embedded backend needs the foreign guest component; "
                    f"build it and point {EMBED_CMD_VAR} at its launch command")
            cmd = shlex.split(raw)
        try:
            self.proc = subprocess.Popen(cmd, stdin=subprocess.PIPE,
                                         stdout=subprocess.PIPE)
        except OSError as exc:
            raise BackendUnavailableError(
                f"cannot launch embedded guest {cmd!r}: {exc}") from None
        self._next_id = 0
        hello = self._request("hello", {"role": "host",
                                        "protocol": PROTOCOL_VERSION},
                              timeout=30.0)
        if hello.get("protocol") != PROTOCOL_VERSION:
            self.close()
            raise BackendUnavailableError(
                f"embedded guest speaks protocol {hello.get('protocol')!r}")

    def _request(self, method: str, params: dict,
                 timeout: float | None = None) -> dict:
        self._next_id += 1
        try:
            write_frame(self.proc.stdin, BridgeMessage.request(
                self._next_id, method, params))
        except (OSError, ValueError) as exc:
            raise GuestProtocolError(f"embedded guest pipe broke: {exc}") from None
        if timeout is not None:
            ready, _, _ = select.select([self.proc.stdout], [], [], timeout)
            if not ready:
                self._kill()
                raise GuestTimeoutError(
                    f"embedded guest did not answer {method} within {timeout}s")
        try:
            resp = read_frame(self.proc.stdout)
        except FrameError as exc:
            raise GuestProtocolError(f"embedded guest sent junk: {exc}") from None
        if resp is None:
            raise GuestProtocolError("embedded guest exited mid-call")
        if resp.id != self._next_id:
            raise GuestProtocolError("embedded guest response out of order")
        if resp.error is not None:
            raise GuestProtocolError(
                f"embedded guest error [{resp.error['code']}] "
                f"{resp.error['message']}")
        return resp.result

    def new_trial(self, game: GameId | str) -> int:
        return self._request("new_trial", {"game": _game_text(game)},
                             timeout=30.0)["handle"]

    def apply(self, handle: int, move: int) -> None:
        self._request("apply", {"handle": handle, "move": move}, timeout=30.0)

    def select_move(self, algorithm: str, handle: int, budget: SearchBudget,
                    seed: int = 0, c: float = DEFAULT_EXPLORATION) -> SearchResult:
        params = {"handle": handle, "algorithm": algorithm,
                  "budget": _budget_wire(budget), "seed": seed_to_wire(seed),
                  "c": c}
        return _to_result(self._request("select_move", params,
                                        timeout=_call_timeout(budget)))

    def release(self, handle: int) -> None:
        self._request("release", {"handle": handle}, timeout=30.0)

    def stats(self) -> dict:
        return self._request("engine_stats", {}, timeout=30.0)

    def _kill(self) -> None:
        if self.proc.poll() is None:
            self.proc.kill()
            self.proc.wait(timeout=5.0)

    def close(self) -> None:
        try:
            if self.proc.poll() is None:
                self._request("shutdown", {}, timeout=5.0)
                self.proc.wait(timeout=5.0)
        except (GuestProtocolError, subprocess.TimeoutExpired):
            pass
        finally:
            self._kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def open_session(backend: str, **kwargs):
    if backend == "native":
        return NativeSession()
    if backend == "socket":
        return SocketSession(**kwargs)
    if backend == "embedded":
        return EmbeddedSession(**kwargs)
    raise ValueError(f"unknown backend {backend!r}, expected one of {BACKENDS}")


def remote_select_move(session, algorithm: str, handle: int,
                       budget: SearchBudget, seed: int = 0,
                       c: float = DEFAULT_EXPLORATION) -> SearchResult:
    """Decision semantics are backend-invariant under iteration budgets."""
    return session.select_move(algorithm, handle, budget, seed, c)
