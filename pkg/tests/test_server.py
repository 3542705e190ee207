import base64
import hashlib
import socket
import struct
import threading

import pytest

from bugworld import protocol
from bugworld.server import WS_GUID, BugServer, Session

RES = 32
CFG = {"resolution": RES}
OBS_BYTES = 2 * RES * RES * 3


def req(session, header, payload=b""):
    out = []
    for raw in session.handle(header, payload):
        out.append(protocol.decode_message(raw))
    return out


def test_step_before_make_is_no_env():
    session = Session()
    (resp, _), = req(session, {"cmd": "step", "action": 0})
    assert resp["type"] == "error"
    assert resp["code"] == "NO_ENV"


def test_make_reset_step_session():
    session = Session()
    (ok, _), = req(session, {"cmd": "make", "env_id": "StaticRoom-v0",
                             "config": CFG})
    assert ok["type"] == "ok"
    (obs, payload), = req(session, {"cmd": "reset", "seed": 3})
    assert obs["type"] == "obs"
    assert obs["w"] == RES and obs["h"] == RES
    assert len(obs["state"]) == 7
    assert len(payload) == OBS_BYTES
    for i in range(10):
        (obs, payload), = req(session, {"cmd": "step", "action": 1})
        assert obs["type"] == "obs"
        assert obs["info"]["step"] == i + 1
        assert len(payload) == OBS_BYTES


def test_obs_payload_is_frame_then_mask():
    session = Session()
    req(session, {"cmd": "make", "env_id": "StaticRoom-v0", "config": CFG})
    req(session, {"cmd": "reset", "seed": 0})
    req(session, {"cmd": "set_bug", "name": "black_screen", "enabled": True})
    (obs, payload), = req(session, {"cmd": "step", "action": 0})
    frame = payload[:OBS_BYTES // 2]
    mask = payload[OBS_BYTES // 2:]
    assert frame == bytes(OBS_BYTES // 2)  # black frame
    assert any(mask)  # full-frame bug color


def test_unknown_command():
    session = Session()
    (resp, _), = req(session, {"cmd": "frobnicate"})
    assert resp["type"] == "error" and resp["code"] == "UNKNOWN_CMD"


def test_missing_cmd_is_malformed():
    session = Session()
    (resp, _), = req(session, {"seed": 1})
    assert resp["code"] == "MALFORMED"


def test_bad_request_does_not_kill_session():
    session = Session()
    req(session, {"cmd": "make", "env_id": "StaticRoom-v0", "config": CFG})
    req(session, {"cmd": "reset", "seed": 0})
    (resp, _), = req(session, {"cmd": "step"})  # missing action
    assert resp["type"] == "error" and resp["code"] == "BAD_REQUEST"
    (obs, _), = req(session, {"cmd": "step", "action": 0})
    assert obs["type"] == "obs"


def test_unknown_env_error_code():
    session = Session()
    (resp, _), = req(session, {"cmd": "make", "env_id": "nosuch"})
    assert resp["type"] == "error" and resp["code"] == "UNKNOWN_ENV"


def test_set_bug_unknown_name():
    session = Session()
    req(session, {"cmd": "make", "env_id": "StaticRoom-v0", "config": CFG})
    (resp, _), = req(session, {"cmd": "set_bug", "name": "nosuch",
                               "enabled": True})
    assert resp["code"] == "UNKNOWN_BUG"


def test_list_bugs_reports_palette():
    session = Session()
    req(session, {"cmd": "make", "env_id": "Maze-v0", "config": CFG})
    (resp, _), = req(session, {"cmd": "list_bugs"})
    assert resp["type"] == "bugs"
    assert len(resp["bugs"]) == 17
    for b in resp["bugs"]:
        assert set(b) >= {"name", "tag", "enabled", "color"}
        assert len(b["color"]) == 3


def test_auto_step_returns_n_obs_then_ok():
    session = Session()
    req(session, {"cmd": "make", "env_id": "Maze-v0", "config": CFG})
    req(session, {"cmd": "reset", "seed": 5})
    msgs = req(session, {"cmd": "auto_step", "n": 5})
    assert len(msgs) == 6
    assert all(h["type"] == "obs" for h, _ in msgs[:5])
    assert msgs[5][0]["type"] == "ok"


def test_auto_step_before_reset_is_no_env():
    session = Session()
    req(session, {"cmd": "make", "env_id": "Maze-v0", "config": CFG})
    (resp, _), = req(session, {"cmd": "auto_step", "n": 3})
    assert resp["type"] == "error" and resp["code"] == "NO_ENV"


def test_episode_done_error_code():
    session = Session()
    req(session, {"cmd": "make", "env_id": "StaticRoom-v0",
                  "config": {"resolution": 16, "step_limit": 1}})
    req(session, {"cmd": "reset", "seed": 0})
    req(session, {"cmd": "step", "action": 0})
    (resp, _), = req(session, {"cmd": "step", "action": 0})
    assert resp["type"] == "error" and resp["code"] == "EPISODE_DONE"


def test_spec_works_without_env():
    session = Session()
    (resp, _), = req(session, {"cmd": "spec"})
    assert resp["type"] == "spec"
    assert len(resp["palette"]) >= 17
    assert "Maze-v0" in resp["envs"]
    assert resp["actions"]["NOOP"] == 0
    assert len(resp["state_layout"]) == 7


def test_request_stream_replay_is_byte_identical():
    requests = [
        ({"cmd": "spec"}, b""),
        ({"cmd": "make", "env_id": "Maze-v0", "config": CFG}, b""),
        ({"cmd": "reset", "seed": 11}, b""),
        ({"cmd": "set_bug", "name": "texture_missing", "enabled": True}, b""),
        ({"cmd": "list_bugs"}, b""),
        ({"cmd": "step", "action": 1}, b""),
        ({"cmd": "step", "action": 3}, b""),
        ({"cmd": "auto_step", "n": 4}, b""),
        ({"cmd": "step", "action": 5}, b""),
    ]
    streams = []
    for _ in range(2):
        session = Session()
        blob = b""
        for header, payload in requests:
            for raw in session.handle(header, payload):
                blob += raw
        streams.append(blob)
    assert streams[0] == streams[1]


# -- real sockets -----------------------------------------------------------


@pytest.fixture(scope="module")
def server():
    srv = BugServer(port=0)
    srv.start()
    t = threading.Thread(target=srv.serve_forever, daemon=True)
    t.start()
    yield srv
    srv.stop()


def send_recv(sock, header, payload=b""):
    sock.sendall(protocol.encode_message(header, payload))

    def read_exactly(n):
        buf = b""
        while len(buf) < n:
            chunk = sock.recv(n - len(buf))
            if not chunk:
                return None if not buf else buf
            buf += chunk
        return buf
    return protocol.read_message(read_exactly)


def test_tcp_round_trip(server):
    with socket.create_connection((server.host, server.port), timeout=10) as s:
        h, _ = send_recv(s, {"cmd": "make", "env_id": "StaticRoom-v0",
                             "config": CFG})
        assert h["type"] == "ok"
        h, payload = send_recv(s, {"cmd": "reset", "seed": 1})
        assert h["type"] == "obs"
        assert len(payload) == OBS_BYTES


def test_tcp_sessions_are_isolated(server):
    with socket.create_connection((server.host, server.port), timeout=10) as a, \
         socket.create_connection((server.host, server.port), timeout=10) as b:
        h, _ = send_recv(a, {"cmd": "make", "env_id": "Maze-v0", "config": CFG})
        assert h["type"] == "ok"
        h, _ = send_recv(b, {"cmd": "step", "action": 0})
        assert h["type"] == "error" and h["code"] == "NO_ENV"


def ws_client_frame(body):
    mask = b"\x12\x34\x56\x78"
    n = len(body)
    if n < 126:
        head = bytes([0x82, 0x80 | n])
    elif n < (1 << 16):
        head = bytes([0x82, 0x80 | 126]) + struct.pack(">H", n)
    else:
        head = bytes([0x82, 0x80 | 127]) + struct.pack(">Q", n)
    masked = bytes(c ^ mask[i % 4] for i, c in enumerate(body))
    return head + mask + masked


def ws_read_frame(sock):
    def read(n):
        buf = b""
        while len(buf) < n:
            chunk = sock.recv(n - len(buf))
            assert chunk
            buf += chunk
        return buf
    b0, b1 = read(2)
    ln = b1 & 0x7F
    if ln == 126:
        ln = struct.unpack(">H", read(2))[0]
    elif ln == 127:
        ln = struct.unpack(">Q", read(8))[0]
    return b0 & 0x0F, read(ln)


def test_websocket_round_trip(server):
    key = base64.b64encode(b"0123456789abcdef").decode()
    with socket.create_connection((server.host, server.port), timeout=10) as s:
        s.sendall((
            "GET /ws HTTP/1.1\r\nHost: x\r\nUpgrade: websocket\r\n"
            "Connection: Upgrade\r\nSec-WebSocket-Version: 13\r\n"
            f"Sec-WebSocket-Key: {key}\r\n\r\n").encode())
        resp = b""
        while b"\r\n\r\n" not in resp:
            resp += s.recv(4096)
        assert b"101" in resp.split(b"\r\n")[0]
        expect = base64.b64encode(
            hashlib.sha1((key + WS_GUID).encode()).digest()).decode()
        assert expect.encode() in resp

        s.sendall(ws_client_frame(protocol.encode_message(
            {"cmd": "make", "env_id": "StaticRoom-v0", "config": CFG})))
        opcode, body = ws_read_frame(s)
        assert opcode == 0x2
        h, _ = protocol.decode_message(body)
        assert h["type"] == "ok"

        s.sendall(ws_client_frame(protocol.encode_message(
            {"cmd": "reset", "seed": 2})))
        opcode, body = ws_read_frame(s)
        h, payload = protocol.decode_message(body)
        assert h["type"] == "obs"
        assert len(payload) == OBS_BYTES

        # close handshake
        s.sendall(bytes([0x88, 0x80]) + b"\x00\x00\x00\x00")
        opcode, _ = ws_read_frame(s)
        assert opcode == 0x8


def test_ws_and_tcp_observations_match(server):
    with socket.create_connection((server.host, server.port), timeout=10) as s:
        send_recv(s, {"cmd": "make", "env_id": "Maze-v0", "config": CFG})
        _, tcp_payload = send_recv(s, {"cmd": "reset", "seed": 9})

    key = base64.b64encode(b"fedcba9876543210").decode()
    with socket.create_connection((server.host, server.port), timeout=10) as s:
        s.sendall((
            "GET /ws HTTP/1.1\r\nHost: x\r\nUpgrade: websocket\r\n"
            "Connection: Upgrade\r\nSec-WebSocket-Version: 13\r\n"
            f"Sec-WebSocket-Key: {key}\r\n\r\n").encode())
        resp = b""
        while b"\r\n\r\n" not in resp:
            resp += s.recv(4096)
        s.sendall(ws_client_frame(protocol.encode_message(
            {"cmd": "make", "env_id": "Maze-v0", "config": CFG})))
        ws_read_frame(s)
        s.sendall(ws_client_frame(protocol.encode_message(
            {"cmd": "reset", "seed": 9})))
        _, body = ws_read_frame(s)
        _, ws_payload = protocol.decode_message(body)
    assert ws_payload == tcp_payload
