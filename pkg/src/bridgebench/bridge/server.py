"""Host side of the socket backend.

A guest attaches over two loopback TCP connections: an engine channel
(guest asks, host's engine answers) and a control channel (host asks,
guest's agent answers).  Both start with a hello exchange that pins the
protocol version; anything else is refused.  One dedicated thread serves
the engine channel for the lifetime of the guest.
"""

from __future__ import annotations

import socket
import threading

from .protocol import (
    ERR_BAD_PARAMS, PROTOCOL_VERSION, BridgeMessage, FrameError,
    read_frame, write_frame,
)
from .service import EngineService

DEFAULT_PORT = 25333


class GuestProtocolError(RuntimeError):
    """The guest broke the wire contract or vanished mid-conversation."""


class GuestTimeoutError(GuestProtocolError):
    """The guest failed to answer inside its deadline."""


class BridgeServer:
    def __init__(self, host: str = "127.0.0.1", port: int = 0,
                 allowed_games=None):
        self.service = EngineService(allowed_games=allowed_games)
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen(4)
        self._listener.settimeout(0.2)
        self.host, self.port = self._listener.getsockname()
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._service_lock = threading.Lock()
        self._control_lock = threading.Lock()
        self._control_sock: socket.socket | None = None
        self._control_files = None
        self._engine_ready = threading.Event()
        self._control_ready = threading.Event()
        self._next_control_id = 0
        self._conns: list[socket.socket] = []

    # -- lifecycle ----------------------------------------------------

    def start(self) -> "BridgeServer":
        t = threading.Thread(target=self._accept_loop, daemon=True,
                             name="bridge-accept")
        t.start()
        self._threads.append(t)
        return self

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()

    def stop(self) -> None:
        self._stop.set()
        for conn in self._conns:
            try:
                conn.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            try:
                conn.close()
            except OSError:
                pass
        self._listener.close()
        for t in self._threads:
            if t is not threading.current_thread():
                t.join(timeout=2.0)
        self.drain()

    def drain(self) -> None:
        """Forget every live handle; used after a guest failure."""
        self.service.table.entries.clear()

    # -- connection handling ------------------------------------------

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                conn, _ = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            self._conns.append(conn)
            t = threading.Thread(target=self._handshake, args=(conn,),
                                 daemon=True, name="bridge-handshake")
            t.start()
            self._threads.append(t)

    def _handshake(self, conn: socket.socket) -> None:
        files = conn.makefile("rwb")
        try:
            conn.settimeout(10.0)
            hello = read_frame(files)
            if hello is None or not hello.is_request() or hello.method != "hello":
                write_frame(files, BridgeMessage.fail(
                    0, ERR_BAD_PARAMS, "expected a hello request"))
                conn.close()
                return
            role = hello.params.get("role")
            version = hello.params.get("protocol")
            if version != PROTOCOL_VERSION:
                write_frame(files, BridgeMessage.fail(
                    hello.id, ERR_BAD_PARAMS,
                    f"unsupported protocol {version!r}, host speaks "
                    f"{PROTOCOL_VERSION}"))
                conn.close()
                return
            if role == "engine" and not self._engine_ready.is_set():
                write_frame(files, BridgeMessage.ok(
                    hello.id, {"ok": True, "protocol": PROTOCOL_VERSION}))
                conn.settimeout(None)
                self._engine_ready.set()
                self._engine_loop(files)
            elif role == "control" and not self._control_ready.is_set():
                write_frame(files, BridgeMessage.ok(
                    hello.id, {"ok": True, "protocol": PROTOCOL_VERSION}))
                conn.settimeout(None)
                self._control_sock = conn
                self._control_files = files
                self._control_ready.set()
            else:
                write_frame(files, BridgeMessage.fail(
                    hello.id, ERR_BAD_PARAMS, f"cannot attach role {role!r}"))
                conn.close()
        except (FrameError, OSError):
            conn.close()

    def _engine_loop(self, files) -> None:
        try:
            while not self._stop.is_set():
                msg = read_frame(files)
                if msg is None:
                    return
                with self._service_lock:
                    resp = self.service.handle(msg)
                write_frame(files, resp)
        except (FrameError, OSError):
            return

    # -- host-side API -------------------------------------------------

    def wait_for_guest(self, timeout: float = 15.0) -> None:
        if not (self._engine_ready.wait(timeout)
                and self._control_ready.wait(timeout)):
            raise GuestTimeoutError("guest never attached both channels")

    def host_call(self, method: str, params: dict) -> dict:
        """Run an engine method directly, through the same service path."""
        with self._service_lock:
            resp = self.service.handle(BridgeMessage.request(0, method, params))
        if resp.error is not None:
            raise GuestProtocolError(
                f"{method}: [{resp.error['code']}] {resp.error['message']}")
        return resp.result

    def control_call(self, method: str, params: dict,
                     timeout: float | None = None) -> dict:
        """Ask the guest to do something; serialized, one call in flight."""
        if not self._control_ready.is_set():
            raise GuestProtocolError("no guest attached to the control channel")
        with self._control_lock:
            self._next_control_id += 1
            call_id = self._next_control_id
            try:
                self._control_sock.settimeout(timeout)
                write_frame(self._control_files,
                            BridgeMessage.request(call_id, method, params))
                resp = read_frame(self._control_files)
            except socket.timeout:
                raise GuestTimeoutError(
                    f"guest did not answer {method} within {timeout}s") from None
            except (FrameError, OSError) as exc:
                raise GuestProtocolError(f"control channel broke: {exc}") from None
        if resp is None:
            raise GuestProtocolError("guest closed the control channel")
        if resp.id != call_id:
            raise GuestProtocolError(
                f"control response id {resp.id} does not match call {call_id}")
        if resp.error is not None:
            raise GuestProtocolError(
                f"guest error [{resp.error['code']}] {resp.error['message']}")
        return resp.result


def serve(host: str = "127.0.0.1", port: int = DEFAULT_PORT) -> BridgeServer:
    """Run a host service for external guests until interrupted."""
    server = BridgeServer(host, port).start()
    return server
