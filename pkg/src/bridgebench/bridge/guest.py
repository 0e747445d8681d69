"""Reference guest: the agent side of the wire, speaking to a remote engine.

The guest re-runs the exact agent logic over engine handles instead of
in-memory states.  Decision arithmetic mirrors the native agents
operation for operation, so under an iteration budget the move index and
effort counter must come out bit-identical on every backend.

Per UCT iteration the guest makes exactly one playout call; node
expansion costs one copy, one apply and one legal_moves.  The alpha-beta
guest probes legal_moves first (count zero doubles as the terminal test)
and releases every handle it created before returning.
"""

from __future__ import annotations

import math
import socket
import time

from ..agents import DEFAULT_EXPLORATION, SearchBudget
from ..rng import Rng
from .protocol import (
    PROTOCOL_VERSION, BridgeMessage, FrameError, read_frame, seed_to_wire,
    write_frame,
)
from .server import DEFAULT_PORT, GuestProtocolError


class WireEngine:
    """Engine-channel client: blocking request/response over frames."""

    def __init__(self, files):
        self._files = files
        self._next_id = 0

    def request(self, method: str, params: dict) -> dict:
        self._next_id += 1
        write_frame(self._files, BridgeMessage.request(self._next_id, method, params))
        resp = read_frame(self._files)
        if resp is None:
            raise GuestProtocolError("engine channel closed mid-call")
        if resp.id != self._next_id:
            raise GuestProtocolError("engine response out of order")
        if resp.error is not None:
            raise GuestProtocolError(
                f"engine error [{resp.error['code']}] {resp.error['message']}")
        return resp.result

    def copy(self, handle: int) -> int:
        return self.request("copy", {"handle": handle})["handle"]

    def apply(self, handle: int, move: int) -> None:
        self.request("apply", {"handle": handle, "move": move})

    def legal_moves(self, handle: int) -> int:
        return self.request("legal_moves", {"handle": handle})["count"]

    def returns_u0(self, handle: int) -> float:
        return self.request("returns", {"handle": handle})["utilities"][0]

    def current_player(self, handle: int) -> int:
        return self.request("current_player", {"handle": handle})["player"]

    def playout_u0(self, handle: int, seed: int) -> float:
        result = self.request("playout",
                              {"handle": handle, "seed": seed_to_wire(seed)})
        return result["utilities"][0]

    def release(self, handle: int) -> None:
        self.request("release", {"handle": handle})


class _RemoteNode:
    __slots__ = ("handle", "k", "mover", "children", "visits", "reward_sum")

    def __init__(self, handle: int, k: int, mover: int):
        self.handle = handle
        self.k = k
        self.mover = mover
        self.children: list[_RemoteNode] = []
        self.visits = 0
        self.reward_sum = 0.0


def _expand(engine: WireEngine, parent: _RemoteNode) -> _RemoteNode:
    handle = engine.copy(parent.handle)
    engine.apply(handle, len(parent.children))
    child = _RemoteNode(handle, engine.legal_moves(handle), 1 - parent.mover)
    parent.children.append(child)
    return child


def _select_child(node: _RemoteNode, c: float) -> _RemoteNode:
    best = None
    best_score = -math.inf
    log_n = None
    for child in node.children:
        v = child.visits
        if v == 0:
            return child
        if log_n is None:
            log_n = math.log(node.visits)
        score = child.reward_sum / v + c * math.sqrt(log_n / v)
        if score > best_score:
            best_score = score
            best = child
    return best


def guest_uct(engine: WireEngine, root_handle: int, budget: SearchBudget,
              seed: int, c: float = DEFAULT_EXPLORATION) -> dict:
    start = time.perf_counter()
    root = _RemoteNode(root_handle, engine.legal_moves(root_handle),
                       engine.current_player(root_handle))
    if root.k == 0:
        raise GuestProtocolError("cannot search a terminal state")
    created: list[int] = []
    for _ in range(root.k):
        created.append(_expand(engine, root).handle)
    stream = Rng(seed)

    def one_iteration():
        seed_i = stream.next_u64()
        node = root
        path = [root]
        while True:
            if node.k == 0:
                break
            if len(node.children) == node.k:
                node = _select_child(node, c)
                path.append(node)
                continue
            node = _expand(engine, node)
            created.append(node.handle)
            path.append(node)
            break
        u0 = engine.playout_u0(node.handle, seed_i)
        u1 = -u0
        for visited in path:
            visited.visits += 1
            if visited.mover == 1:
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
    for handle in created:
        engine.release(handle)
    return {"move_index": best_i, "playouts": root.visits,
            "elapsed": time.perf_counter() - start}


class _GuestDeadline:
    __slots__ = ("until", "cap")

    def __init__(self, budget: SearchBudget, start: float):
        self.until = None if budget.wall_ms is None else start + budget.wall_ms / 1000.0
        self.cap = budget.max_iterations

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


def _guest_ab(engine: WireEngine, handle: int, mover: int, alpha: float,
              beta: float, deadline: _GuestDeadline, counter: _Counter) -> float:
    k = engine.legal_moves(handle)
    if k == 0:
        u0 = engine.returns_u0(handle)
        return u0 if mover == 0 else -u0
    if deadline.expired(counter.expansions):
        return 0.0
    counter.expansions += 1
    best = -math.inf
    for i in range(k):
        child = engine.copy(handle)
        engine.apply(child, i)
        v = -_guest_ab(engine, child, 1 - mover, -beta, -alpha,
                       deadline, counter)
        engine.release(child)
        if v > best:
            best = v
        if v > alpha:
            alpha = v
        if alpha >= beta:
            break
    return best


def guest_minimax(engine: WireEngine, root_handle: int,
                  budget: SearchBudget) -> dict:
    start = time.perf_counter()
    mover = engine.current_player(root_handle)
    k = engine.legal_moves(root_handle)
    if k == 0:
        raise GuestProtocolError("cannot search a terminal state")
    deadline = _GuestDeadline(budget, start)
    counter = _Counter()
    counter.expansions = 1
    best_i = 0
    best_v = -math.inf
    alpha = -math.inf
    for i in range(k):
        if deadline.expired(counter.expansions):
            v = 0.0
        else:
            child = engine.copy(root_handle)
            engine.apply(child, i)
            v = -_guest_ab(engine, child, 1 - mover, -math.inf, -alpha,
                           deadline, counter)
            engine.release(child)
        if v > best_v:
            best_v = v
            best_i = i
        if v > alpha:
            alpha = v
    return {"move_index": best_i, "expansions": counter.expansions,
            "elapsed": time.perf_counter() - start}


# -- process entry -----------------------------------------------------

def _attach(host: str, port: int, role: str):
    sock = socket.create_connection((host, port), timeout=10.0)
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    files = sock.makefile("rwb")
    write_frame(files, BridgeMessage.request(
        0, "hello", {"role": role, "protocol": PROTOCOL_VERSION}))
    resp = read_frame(files)
    if resp is None:
        raise GuestProtocolError("host closed during hello")
    if resp.error is not None:
        message = resp.error["message"]
        if "protocol" in message:
            raise _ProtocolMismatch(message)
        raise GuestProtocolError(message)
    # the 10 s timeout only guards connect and hello; an attached guest
    # waits as long as the host keeps the session open
    sock.settimeout(None)
    return sock, files


class _ProtocolMismatch(Exception):
    pass


def run_select_move(engine: WireEngine, params: dict) -> dict:
    budget_spec = params.get("budget") or {}
    budget = SearchBudget(wall_ms=budget_spec.get("wall_ms"),
                          max_iterations=budget_spec.get("max_iterations"))
    algorithm = params.get("algorithm")
    handle = params.get("handle")
    if algorithm == "uct":
        from .protocol import seed_from_wire
        return guest_uct(engine, handle, budget,
                         seed_from_wire(params.get("seed", "0")),
                         float(params.get("c", DEFAULT_EXPLORATION)))
    if algorithm == "minimax":
        return guest_minimax(engine, handle, budget)
    raise GuestProtocolError(f"unknown algorithm {algorithm!r}")


def reference_guest_connect(host: str = "127.0.0.1",
                            port: int = DEFAULT_PORT) -> int:
    """Attach to a host and serve control requests until shutdown.

    Returns a process exit code: 0 after a clean shutdown, 2 when the
    host is unreachable or the conversation breaks, 3 on a protocol
    version mismatch.
    """
    try:
        eng_sock, eng_files = _attach(host, port, "engine")
        ctl_sock, ctl_files = _attach(host, port, "control")
    except _ProtocolMismatch:
        return 3
    except (OSError, GuestProtocolError):
        return 2
    engine = WireEngine(eng_files)
    try:
        while True:
            req = read_frame(ctl_files)
            if req is None:
                return 2
            if not req.is_request():
                continue
            if req.method == "shutdown":
                write_frame(ctl_files, BridgeMessage.ok(req.id, {}))
                return 0
            if req.method == "select_move":
                try:
                    result = run_select_move(engine, req.params)
                    write_frame(ctl_files, BridgeMessage.ok(req.id, result))
                except (GuestProtocolError, ValueError) as exc:
                    write_frame(ctl_files, BridgeMessage.fail(req.id, 5, str(exc)))
            else:
                write_frame(ctl_files, BridgeMessage.fail(
                    req.id, 1, f"unknown control method {req.method!r}"))
    except (FrameError, OSError):
        return 2
    finally:
        for closing in (eng_sock, ctl_sock):
            try:
                closing.close()
            except OSError:
                pass
