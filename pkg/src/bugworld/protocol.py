"""Binary wire protocol framing.

A message is a 4-byte big-endian header length, a UTF-8 JSON header, then
a raw binary payload whose length is the header's "payload_len" field.
Headers are serialized with sorted keys and compact separators so that
identical requests produce identical bytes (replay determinism).
"""

from __future__ import annotations

import json
import struct

from .errors import MalformedMessageError

MAX_HEADER_LEN = 1 << 20
MAX_PAYLOAD_LEN = 1 << 28


def encode_message(header: dict, payload: bytes = b"") -> bytes:
    h = dict(header)
    h["payload_len"] = len(payload)
    raw = json.dumps(h, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return struct.pack(">I", len(raw)) + raw + payload


def decode_message(data: bytes) -> tuple[dict, bytes]:
    """Decode one message from a complete byte string."""
    if len(data) < 4:
        raise MalformedMessageError("truncated length prefix")
    (hlen,) = struct.unpack(">I", data[:4])
    if hlen > MAX_HEADER_LEN or len(data) < 4 + hlen:
        raise MalformedMessageError("truncated header")
    header = _parse_header(data[4:4 + hlen])
    plen = header["payload_len"]
    payload = data[4 + hlen:4 + hlen + plen]
    if len(payload) != plen:
        raise MalformedMessageError("truncated payload")
    return header, payload


def _parse_header(raw: bytes) -> dict:
    try:
        header = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise MalformedMessageError(f"invalid header JSON: {e}") from e
    if not isinstance(header, dict):
        raise MalformedMessageError("header must be a JSON object")
    plen = header.get("payload_len", 0)
    if not isinstance(plen, int) or plen < 0 or plen > MAX_PAYLOAD_LEN:
        raise MalformedMessageError("bad payload_len")
    header["payload_len"] = plen
    return header


def read_message(read_exactly) -> tuple[dict, bytes] | None:
    """Read one framed message via a read_exactly(n) callable.

    Returns None on clean EOF at a message boundary.
    """
    prefix = read_exactly(4)
    if prefix is None:
        return None
    if len(prefix) < 4:
        raise MalformedMessageError("truncated length prefix")
    (hlen,) = struct.unpack(">I", prefix)
    if hlen > MAX_HEADER_LEN:
        raise MalformedMessageError("header too large")
    raw = read_exactly(hlen)
    if raw is None or len(raw) < hlen:
        raise MalformedMessageError("truncated header")
    header = _parse_header(raw)
    plen = header["payload_len"]
    payload = b""
    if plen:
        payload = read_exactly(plen)
        if payload is None or len(payload) < plen:
            raise MalformedMessageError("truncated payload")
    return header, payload
