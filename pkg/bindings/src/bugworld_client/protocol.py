"""Client-side framing for the bugworld wire protocol.

Each message is a 4-byte big-endian header length, a JSON header and a raw
payload of header["payload_len"] bytes.
"""

from __future__ import annotations

import json
import struct


class ProtocolError(Exception):
    pass


def encode_message(header: dict, payload: bytes = b"") -> bytes:
    header = dict(header)
    header["payload_len"] = len(payload)
    raw = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    return struct.pack(">I", len(raw)) + raw + payload


def read_message(read_exactly):
    """Read one message via read_exactly(n) -> bytes|None (None = EOF)."""
    prefix = read_exactly(4)
    if prefix is None:
        return None
    if len(prefix) != 4:
        raise ProtocolError("truncated length prefix")
    (hlen,) = struct.unpack(">I", prefix)
    raw = read_exactly(hlen)
    if raw is None or len(raw) != hlen:
        raise ProtocolError("truncated header")
    try:
        header = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ProtocolError(f"bad header: {e}")
    if not isinstance(header, dict):
        raise ProtocolError("header must be a JSON object")
    n = int(header.get("payload_len", 0))
    if n < 0:
        raise ProtocolError("negative payload_len")
    payload = b""
    if n:
        payload = read_exactly(n)
        if payload is None or len(payload) != n:
            raise ProtocolError("truncated payload")
    return header, payload
