"""Length-prefixed JSON frames, byte-exact across implementations.

A frame is a 4-byte big-endian body length followed by a UTF-8 JSON
object with no whitespace and a fixed key order:

* request:  ``{"id":N,"method":"...","params":{...}}``
* success:  ``{"id":N,"result":{...}}``
* failure:  ``{"id":N,"error":{"code":C,"message":"..."}}``

Unsigned 64-bit quantities (seeds) travel as decimal strings so that
peers without native 64-bit integers stay exact.  Handles are plain JSON
numbers.  Bodies above 16 MiB are refused on both sides.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

MAX_BODY = 16 * 1024 * 1024
PROTOCOL_VERSION = 1

ERR_UNKNOWN_METHOD = 1
ERR_BAD_HANDLE = 2
ERR_NOT_TERMINAL = 3
ERR_ILLEGAL_MOVE = 4
ERR_BAD_PARAMS = 5
ERR_INTERNAL = 6


class FrameError(ValueError):
    """Malformed frame: bad prefix, bad JSON, or a broken envelope."""


@dataclass(frozen=True)
class BridgeMessage:
    id: int
    method: str | None = None
    params: dict | None = None
    result: dict | None = None
    error: dict | None = None

    def is_request(self) -> bool:
        return self.method is not None

    @classmethod
    def request(cls, id: int, method: str, params: dict) -> "BridgeMessage":
        return cls(id=id, method=method, params=params)

    @classmethod
    def ok(cls, id: int, result: dict) -> "BridgeMessage":
        return cls(id=id, result=result)

    @classmethod
    def fail(cls, id: int, code: int, message: str) -> "BridgeMessage":
        return cls(id=id, error={"code": code, "message": message})


def encode_frame(msg: BridgeMessage) -> bytes:
    if msg.method is not None:
        if msg.params is None or msg.result is not None or msg.error is not None:
            raise FrameError("request must carry params and nothing else")
        body = {"id": msg.id, "method": msg.method, "params": msg.params}
    elif msg.error is not None:
        if msg.result is not None:
            raise FrameError("response cannot carry both result and error")
        body = {"id": msg.id, "error": msg.error}
    elif msg.result is not None:
        body = {"id": msg.id, "result": msg.result}
    else:
        raise FrameError("message is neither request nor response")
    encoded = json.dumps(body, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    if len(encoded) > MAX_BODY:
        raise FrameError(f"body of {len(encoded)} bytes exceeds the 16 MiB cap")
    return struct.pack(">I", len(encoded)) + encoded


def decode_frame(frame: bytes) -> BridgeMessage:
    """Inverse of encode_frame over one complete frame."""
    if len(frame) < 4:
        raise FrameError("frame shorter than its length prefix")
    (length,) = struct.unpack(">I", frame[:4])
    if length > MAX_BODY:
        raise FrameError(f"declared body of {length} bytes exceeds the 16 MiB cap")
    body = frame[4:]
    if len(body) != length:
        raise FrameError(f"declared {length} body bytes, found {len(body)}")
    return _parse_body(body)


def _parse_body(body: bytes) -> BridgeMessage:
    try:
        obj = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FrameError(f"body is not UTF-8 JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise FrameError("body must be a JSON object")
    if not isinstance(obj.get("id"), int) or isinstance(obj.get("id"), bool):
        raise FrameError("missing or non-integer id")
    msg_id = obj["id"]
    keys = set(obj)
    if keys == {"id", "method", "params"}:
        if not isinstance(obj["method"], str) or not isinstance(obj["params"], dict):
            raise FrameError("request needs a string method and object params")
        return BridgeMessage.request(msg_id, obj["method"], obj["params"])
    if keys == {"id", "result"}:
        if not isinstance(obj["result"], dict):
            raise FrameError("result must be an object")
        return BridgeMessage.ok(msg_id, obj["result"])
    if keys == {"id", "error"}:
        err = obj["error"]
        if (not isinstance(err, dict) or set(err) != {"code", "message"}
                or not isinstance(err.get("code"), int)
                or not isinstance(err.get("message"), str)):
            raise FrameError("error must be {code, message}")
        return BridgeMessage.fail(msg_id, err["code"], err["message"])
    raise FrameError(f"unrecognized envelope keys {sorted(keys)}")


def write_frame(stream, msg: BridgeMessage) -> None:
    stream.write(encode_frame(msg))
    stream.flush()


def read_frame(stream) -> BridgeMessage | None:
    """Read one frame from a blocking byte stream; None on clean EOF."""
    prefix = _read_exact(stream, 4, allow_eof=True)
    if prefix is None:
        return None
    (length,) = struct.unpack(">I", prefix)
    if length > MAX_BODY:
        raise FrameError(f"declared body of {length} bytes exceeds the 16 MiB cap")
    body = _read_exact(stream, length)
    return _parse_body(body)


def _read_exact(stream, n: int, allow_eof: bool = False):
    chunks = []
    remaining = n
    while remaining:
        chunk = stream.read(remaining)
        if not chunk:
            if allow_eof and remaining == n:
                return None
            raise FrameError(f"stream ended {remaining} bytes short of a frame")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def seed_to_wire(seed: int) -> str:
    return str(seed & (2**64 - 1))


def seed_from_wire(value) -> int:
    """Accept a decimal string or a plain non-negative int."""
    if isinstance(value, str):
        if not value.isdigit():
            raise FrameError(f"seed string must be decimal digits, got {value!r}")
        seed = int(value)
    elif isinstance(value, int) and not isinstance(value, bool):
        seed = value
    else:
        raise FrameError("seed must be a decimal string or integer")
    if not 0 <= seed < 2**64:
        raise FrameError("seed out of 64-bit range")
    return seed
