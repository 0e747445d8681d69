"""Wire format: pinned bytes, total decoding, fuzz round-trips."""

import io
import json
import struct

import pytest
from hypothesis import given, settings, strategies as st

from bridgebench.bridge.protocol import (
    MAX_BODY, BridgeMessage, FrameError, decode_frame, encode_frame,
    read_frame, seed_from_wire, seed_to_wire, write_frame,
)


def test_documented_example_frame_bytes():
    msg = BridgeMessage.request(1, "is_terminal", {"handle": 7})
    frame = encode_frame(msg)
    body = b'{"id":1,"method":"is_terminal","params":{"handle":7}}'
    assert len(body) == 53
    assert frame[:4] == bytes([0x00, 0x00, 0x00, 0x35])
    assert frame[4:] == body


def test_key_order_is_fixed():
    # construction order must not leak into the wire
    req = BridgeMessage(id=2, params={"a": 1}, method="x")
    assert encode_frame(req)[4:].startswith(b'{"id":2,"method":"x","params":')
    ok = BridgeMessage.ok(3, {"v": 1})
    assert encode_frame(ok)[4:] == b'{"id":3,"result":{"v":1}}'
    err = BridgeMessage.fail(4, 2, "gone")
    assert encode_frame(err)[4:] == b'{"id":4,"error":{"code":2,"message":"gone"}}'


def test_round_trip_identity():
    for msg in [BridgeMessage.request(9, "playout", {"handle": 1, "seed": "17"}),
                BridgeMessage.ok(9, {"utilities": [1.0, -1.0], "plies": 4}),
                BridgeMessage.fail(9, 6, "boom")]:
        assert decode_frame(encode_frame(msg)) == msg


@pytest.mark.parametrize("raw", [
    b"",
    b"\x00\x00",
    b"\x00\x00\x00\x05abc",            # declared 5, got 3
    b"\x00\x00\x00\x02abc",            # declared 2, got 3
    struct.pack(">I", 3) + b"not",     # invalid json
    struct.pack(">I", 2) + b"[]",      # not an object
    struct.pack(">I", 8) + b'{"id":1}',
    struct.pack(">I", 20) + b'{"id":"x","result":{}}'[:20],
])
def test_malformed_frames_rejected(raw):
    with pytest.raises(FrameError):
        decode_frame(raw)


def test_mixed_envelopes_rejected():
    raw = json.dumps({"id": 1, "result": {}, "error": {"code": 1, "message": ""}},
                     separators=(",", ":")).encode()
    with pytest.raises(FrameError):
        decode_frame(struct.pack(">I", len(raw)) + raw)
    with pytest.raises(FrameError):
        encode_frame(BridgeMessage(id=1))


def test_oversized_body_refused_both_ways():
    with pytest.raises(FrameError):
        encode_frame(BridgeMessage.request(1, "x", {"blob": "a" * MAX_BODY}))
    with pytest.raises(FrameError):
        decode_frame(struct.pack(">I", MAX_BODY + 1) + b"")


def test_stream_read_write():
    buf = io.BytesIO()
    msgs = [BridgeMessage.request(i, "legal_moves", {"handle": i}) for i in range(4)]
    for m in msgs:
        write_frame(buf, m)
    buf.seek(0)
    assert [read_frame(buf) for _ in range(4)] == msgs
    assert read_frame(buf) is None  # clean EOF


def test_stream_truncation_is_an_error():
    buf = io.BytesIO(encode_frame(BridgeMessage.ok(1, {}))[:-2])
    with pytest.raises(FrameError):
        read_frame(buf)


def test_seed_wire_convention():
    assert seed_to_wire(2**64 - 1) == "18446744073709551615"
    assert seed_from_wire("18446744073709551615") == 2**64 - 1
    assert seed_from_wire(42) == 42
    for bad in ["-1", "1.5", "0x10", 2**64, -3, None, True]:
        with pytest.raises(FrameError):
            seed_from_wire(bad)


_method = st.text(st.characters(min_codepoint=33, max_codepoint=0x2FA1),
                  min_size=1, max_size=20)
_json_scalars = st.one_of(
    st.integers(min_value=-2**31, max_value=2**31),
    st.text(max_size=30),
    st.booleans(),
    st.none(),
    st.floats(allow_nan=False, allow_infinity=False, width=32),
)
_params = st.dictionaries(st.text(min_size=1, max_size=12), _json_scalars,
                          max_size=6)


@given(st.integers(min_value=0, max_value=2**31), _method, _params)
@settings(max_examples=250, deadline=None)
def test_fuzz_request_round_trip(msg_id, method, params):
    msg = BridgeMessage.request(msg_id, method, params)
    again = decode_frame(encode_frame(msg))
    assert again.id == msg.id and again.method == method
    assert json.dumps(again.params, sort_keys=True) == \
        json.dumps(params, sort_keys=True)


@given(st.binary(max_size=80))
@settings(max_examples=250, deadline=None)
def test_fuzz_decode_is_total(junk):
    # decoding never hangs or crashes with anything but FrameError
    try:
        decode_frame(junk)
    except FrameError:
        pass
