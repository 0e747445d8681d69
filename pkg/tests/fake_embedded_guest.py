"""Stand-in embedded guest for exercising the session plumbing.

Speaks the embedded control contract over stdio while running engine and
agent in this one process, exactly the shape the real foreign-runtime
guest has.  Used only by tests.
"""

import sys

from bridgebench.agents import DEFAULT_EXPLORATION, SearchBudget
from bridgebench.agents import minimax_select_move, uct_select_move
from bridgebench.bridge.protocol import (
    PROTOCOL_VERSION, BridgeMessage, read_frame, seed_from_wire, write_frame,
)
from bridgebench.bridge.service import EngineService


def main() -> int:
    stdin = sys.stdin.buffer
    stdout = sys.stdout.buffer
    service = EngineService()
    while True:
        req = read_frame(stdin)
        if req is None:
            return 2
        if req.method == "hello":
            if req.params.get("protocol") != PROTOCOL_VERSION:
                write_frame(stdout, BridgeMessage.fail(
                    req.id, 5, "unsupported protocol"))
                return 3
            write_frame(stdout, BridgeMessage.ok(
                req.id, {"ok": True, "protocol": PROTOCOL_VERSION}))
        elif req.method == "shutdown":
            write_frame(stdout, BridgeMessage.ok(req.id, {}))
            return 0
        elif req.method == "select_move":
            p = req.params
            budget = SearchBudget(
                wall_ms=p["budget"].get("wall_ms"),
                max_iterations=p["budget"].get("max_iterations"))
            state = service.table.get(p["handle"])
            if p["algorithm"] == "uct":
                res = uct_select_move(state, budget, seed_from_wire(p["seed"]),
                                      float(p.get("c", DEFAULT_EXPLORATION)))
                out = {"move_index": res.move_index, "playouts": res.playouts,
                       "elapsed": res.elapsed}
            else:
                res = minimax_select_move(state, budget)
                out = {"move_index": res.move_index,
                       "expansions": res.expansions, "elapsed": res.elapsed}
            write_frame(stdout, BridgeMessage.ok(req.id, out))
        else:
            write_frame(stdout, service.handle(req))


if __name__ == "__main__":
    sys.exit(main())
