"""Cross-backend behavior: transparency, call counts, handle hygiene."""

import os
import socket
import sys

import pytest

from bridgebench.agents import SearchBudget
from bridgebench.bridge.backends import (
    BackendUnavailableError, EmbeddedSession, NativeSession, SocketSession,
    open_session, remote_select_move,
)
from bridgebench.bridge.protocol import (
    BridgeMessage, read_frame, write_frame,
)
from bridgebench.bridge.server import BridgeServer

FAKE_EMBED = [sys.executable, os.path.join(os.path.dirname(__file__),
                                           "fake_embedded_guest.py")]


@pytest.fixture(scope="module")
def socket_session():
    with SocketSession() as session:
        yield session


@pytest.fixture(scope="module")
def embedded_session():
    with EmbeddedSession(cmd=FAKE_EMBED) as session:
        yield session


def _decisions(session, game, algorithm, iters, seed):
    handle = session.new_trial(game)
    try:
        res = remote_select_move(session, algorithm, handle,
                                 SearchBudget.iterations(iters), seed=seed)
        return res.decision()
    finally:
        session.release(handle)


def test_native_session_round_trip():
    with NativeSession() as session:
        h = session.new_trial("nim{h1=3,h2=4}")
        res = session.select_move("uct", h, SearchBudget.iterations(100), seed=4)
        assert res.playouts == 100
        session.release(h)
        assert session.stats()["live_handles"] == 0


@pytest.mark.parametrize("game,algorithm", [
    ("tictactoe", "uct"),
    ("nim{h1=3,h2=4}", "minimax"),
    ("synthetic{branching=3,depth=4}", "uct"),
    ("synthetic{branching=2,depth=5}", "minimax"),
])
def test_socket_matches_native_decisions(socket_session, game, algorithm):
    for seed in (1, 2):
        native = _decisions(NativeSession(), game, algorithm, 300, seed)
        remote = _decisions(socket_session, game, algorithm, 300, seed)
        assert native == remote


def test_embedded_matches_native_decisions(embedded_session):
    for game, algorithm in [("tictactoe", "uct"), ("nim{h1=2,h2=3}", "minimax")]:
        native = _decisions(NativeSession(), game, algorithm, 250, 9)
        embedded = _decisions(embedded_session, game, algorithm, 250, 9)
        assert native == embedded


def test_uct_playout_calls_equal_iterations(socket_session):
    n = 137
    before = socket_session.stats()["calls"].get("playout", 0)
    handle = socket_session.new_trial("tictactoe")
    socket_session.select_move("uct", handle, SearchBudget.iterations(n), seed=1)
    after = socket_session.stats()["calls"]["playout"]
    socket_session.release(handle)
    assert after - before == n


def test_minimax_call_counts_follow_the_expansion_model(socket_session):
    before = socket_session.stats()["calls"]
    handle = socket_session.new_trial("synthetic{branching=3,depth=3}")
    res = socket_session.select_move("minimax", handle,
                                     SearchBudget.iterations(10**9))
    after = socket_session.stats()["calls"]
    socket_session.release(handle)

    def delta(method):
        return after.get(method, 0) - before.get(method, 0)

    # one copy+apply+release per explored edge, one legal_moves probe per
    # node visited, zero playouts
    assert delta("copy") == delta("apply") == delta("release")
    assert delta("playout") == 0
    assert delta("legal_moves") == delta("copy") + 1  # every child plus root
    assert delta("copy") >= res.expansions - 1


def test_handle_hygiene_across_select_move(socket_session):
    live0 = socket_session.stats()["live_handles"]
    handle = socket_session.new_trial("nim{h1=3,h2=2}")
    socket_session.select_move("uct", handle, SearchBudget.iterations(80), seed=2)
    assert socket_session.stats()["live_handles"] == live0 + 1
    socket_session.select_move("minimax", handle, SearchBudget.iterations(50))
    assert socket_session.stats()["live_handles"] == live0 + 1
    socket_session.release(handle)
    assert socket_session.stats()["live_handles"] == live0


def test_wall_budget_over_socket(socket_session):
    handle = socket_session.new_trial("tictactoe")
    res = socket_session.select_move("uct", handle, SearchBudget.wall(60), seed=3)
    socket_session.release(handle)
    assert res.playouts > 0
    assert res.elapsed >= 0.05


def test_attached_guest_socket_never_times_out():
    # the 10 s timeout may only cover connect and hello; afterwards the
    # guest blocks on the host for as long as the session lives
    from bridgebench.bridge.guest import _attach

    with BridgeServer() as server:
        sock, files = _attach(server.host, server.port, "engine")
        assert sock.gettimeout() is None
        sock.close()


def test_hello_accepts_engine_role():
    with BridgeServer() as server:
        sock = socket.create_connection((server.host, server.port), timeout=5)
        files = sock.makefile("rwb")
        write_frame(files, BridgeMessage.request(
            0, "hello", {"role": "engine", "protocol": 1}))
        resp = read_frame(files)
        assert resp.error is None
        assert resp.result == {"ok": True, "protocol": 1}
        sock.close()


def test_hello_refuses_wrong_protocol_version():
    with BridgeServer() as server:
        sock = socket.create_connection((server.host, server.port), timeout=5)
        files = sock.makefile("rwb")
        write_frame(files, BridgeMessage.request(
            0, "hello", {"role": "engine", "protocol": 2}))
        resp = read_frame(files)
        assert resp.error is not None
        assert "protocol" in resp.error["message"]
        sock.close()


def test_hello_refuses_unknown_role():
    with BridgeServer() as server:
        sock = socket.create_connection((server.host, server.port), timeout=5)
        files = sock.makefile("rwb")
        write_frame(files, BridgeMessage.request(
            0, "hello", {"role": "chaos", "protocol": 1}))
        resp = read_frame(files)
        assert resp.error is not None
        sock.close()


def test_embedded_unavailable_without_component(monkeypatch):
    monkeypatch.delenv("BRIDGEBENCH_EMBED_CMD", raising=False)
    with pytest.raises(BackendUnavailableError) as err:
        EmbeddedSession()
    assert "guest component" in str(err.value)


def test_embedded_env_var_is_honored(monkeypatch):
    monkeypatch.setenv("BRIDGEBENCH_EMBED_CMD",
                       " ".join(FAKE_EMBED))
    with open_session("embedded") as session:
        h = session.new_trial("tictactoe")
        res = session.select_move("uct", h, SearchBudget.iterations(50), seed=1)
        assert res.playouts == 50


def test_open_session_rejects_unknown_backend():
    with pytest.raises(ValueError):
        open_session("carrier-pigeon")
