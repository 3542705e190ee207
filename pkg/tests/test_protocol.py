import struct

import pytest

from bugworld import protocol
from bugworld.errors import MalformedMessageError


def test_round_trip_empty_payload():
    raw = protocol.encode_message({"cmd": "reset", "seed": 1})
    header, payload = protocol.decode_message(raw)
    assert header["cmd"] == "reset"
    assert header["seed"] == 1
    assert header["payload_len"] == 0
    assert payload == b""


def test_round_trip_with_payload():
    blob = bytes(range(256)) * 7
    raw = protocol.encode_message({"type": "obs"}, blob)
    header, payload = protocol.decode_message(raw)
    assert payload == blob
    assert header["payload_len"] == len(blob)


def test_encoding_is_deterministic():
    a = protocol.encode_message({"b": 1, "a": 2})
    b = protocol.encode_message({"a": 2, "b": 1})
    assert a == b  # sorted keys


def test_length_prefix_is_big_endian():
    raw = protocol.encode_message({"cmd": "x"})
    (hlen,) = struct.unpack(">I", raw[:4])
    assert hlen == len(raw) - 4


def test_truncated_prefix_rejected():
    with pytest.raises(MalformedMessageError):
        protocol.decode_message(b"\x00\x01")


def test_truncated_header_rejected():
    raw = protocol.encode_message({"cmd": "reset"})
    with pytest.raises(MalformedMessageError):
        protocol.decode_message(raw[:-3])


def test_truncated_payload_rejected():
    raw = protocol.encode_message({"cmd": "x"}, b"abcdef")
    with pytest.raises(MalformedMessageError):
        protocol.decode_message(raw[:-2])


def test_invalid_json_header_rejected():
    bad = b"not json"
    raw = struct.pack(">I", len(bad)) + bad
    with pytest.raises(MalformedMessageError):
        protocol.decode_message(raw)


def test_header_must_be_object():
    body = b"[1,2,3]"
    raw = struct.pack(">I", len(body)) + body
    with pytest.raises(MalformedMessageError):
        protocol.decode_message(raw)


def test_negative_payload_len_rejected():
    body = b'{"payload_len":-5}'
    raw = struct.pack(">I", len(body)) + body
    with pytest.raises(MalformedMessageError):
        protocol.decode_message(raw)


def make_reader(data):
    buf = {"data": data}

    def read_exactly(n):
        chunk = buf["data"][:n]
        buf["data"] = buf["data"][n:]
        if not chunk:
            return None
        return chunk
    return read_exactly


def test_read_message_stream():
    raw = (protocol.encode_message({"cmd": "a"}) +
           protocol.encode_message({"cmd": "b"}, b"xy"))
    reader = make_reader(raw)
    h1, p1 = protocol.read_message(reader)
    h2, p2 = protocol.read_message(reader)
    assert h1["cmd"] == "a" and p1 == b""
    assert h2["cmd"] == "b" and p2 == b"xy"
    assert protocol.read_message(reader) is None  # clean EOF


def test_read_message_truncated_mid_header():
    raw = protocol.encode_message({"cmd": "abc"})
    reader = make_reader(raw[:7])
    with pytest.raises(MalformedMessageError):
        protocol.read_message(reader)


def test_read_message_truncated_mid_payload():
    raw = protocol.encode_message({"cmd": "x"}, b"0123456789")
    reader = make_reader(raw[:-4])
    with pytest.raises(MalformedMessageError):
        protocol.read_message(reader)


def test_obs_payload_size_arithmetic():
    frame = bytes(128 * 128 * 3)
    mask = bytes(128 * 128 * 3)
    raw = protocol.encode_message({"type": "obs"}, frame + mask)
    header, payload = protocol.decode_message(raw)
    assert header["payload_len"] == 98304
    assert len(payload) == 2 * 49152
