"""Socket server exposing the environment API over the binary protocol.

The same port also answers HTTP: GET /ws upgrades to a WebSocket carrying
the identical message bodies (length-prefixed header + payload per binary
frame), and other GET paths serve the optional viewer's static files.
"""

from __future__ import annotations

import base64
import hashlib
import mimetypes
import os
import socket
import struct
import threading
from pathlib import Path
from typing import Optional

from . import protocol
from .envs import STATE_LAYOUT, Env, EnvConfig, make
from .errors import (BugWorldError, EpisodeDoneError, MalformedMessageError,
                     NoEnvironmentError)
from .world import ACTION_NAMES

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


class Session:
    """One connection = one environment instance, requests served in order."""

    def __init__(self, default_env: Optional[str] = None,
                 default_config: Optional[dict] = None,
                 default_seed: Optional[int] = None):
        self.env: Optional[Env] = None
        self.default_seed = default_seed
        if default_env is not None:
            self.env = make(default_env, default_config)

    def handle(self, header: dict, payload: bytes) -> list[bytes]:
        """Process one request, returning encoded response messages."""
        cmd = header.get("cmd")
        if not isinstance(cmd, str):
            return [self._error("MALFORMED", "missing cmd")]
        try:
            fn = getattr(self, f"_cmd_{cmd}", None)
            if fn is None:
                return [self._error("UNKNOWN_CMD", cmd)]
            return fn(header)
        except BugWorldError as e:
            return [self._error(e.code, str(e))]
        except (KeyError, TypeError, ValueError) as e:
            return [self._error("BAD_REQUEST", str(e))]

    # -- commands ---------------------------------------------------------

    def _cmd_make(self, h):
        self.env = make(h["env_id"], h.get("config"))
        return [protocol.encode_message({"type": "ok"})]

    def _cmd_reset(self, h):
        env = self._require_env()
        seed = h.get("seed", self.default_seed or 0)
        obs = env.reset(int(seed))
        return [self._obs_message(env, obs, None)]

    def _cmd_step(self, h):
        env = self._require_env()
        obs, info = env.step(int(h["action"]))
        if obs is None:
            return [protocol.encode_message({"type": "ok", "info": _info_dict(info)})]
        return [self._obs_message(env, obs, info)]

    def _cmd_set_bug(self, h):
        env = self._require_env()
        env.set_bug(h["name"], bool(h["enabled"]), h.get("params"))
        return [protocol.encode_message({"type": "ok"})]

    def _cmd_list_bugs(self, h):
        env = self._require_env()
        bugs = env.list_bugs()
        for b in bugs:
            b["color"] = list(env.registry.color(b["tag"]))
        return [protocol.encode_message({"type": "bugs", "bugs": bugs})]

    def _cmd_set_behaviour(self, h):
        env = self._require_env()
        env.set_behaviour(h["name"])
        return [protocol.encode_message({"type": "ok"})]

    def _cmd_auto_step(self, h):
        env = self._require_env()
        if env.world is None:
            raise NoEnvironmentError("reset is required before auto_step")
        n = int(h["n"])
        out = []
        for _ in range(n):
            try:
                obs, info = env.step(env.policy.act(env.world))
            except EpisodeDoneError:
                break
            if obs is None:
                out.append(protocol.encode_message(
                    {"type": "ok", "info": _info_dict(info)}))
                return out
            out.append(self._obs_message(env, obs, info))
        out.append(protocol.encode_message({"type": "ok"}))
        return out

    def _cmd_spec(self, h):
        env = self.env
        if env is not None:
            w, hgt = env.config.width, env.config.height
            palette = {name: list(c) for name, c in env.registry.palette().items()}
        else:
            cfg = EnvConfig()
            w, hgt = cfg.width, cfg.height
            from .tags import TagRegistry
            from .bugs import BugCatalog
            reg = TagRegistry()
            BugCatalog(reg)
            palette = {name: list(c) for name, c in reg.palette().items()}
        from .envs import ENV_IDS
        return [protocol.encode_message({
            "type": "spec",
            "w": w, "h": hgt,
            "actions": {name: i for i, name in enumerate(ACTION_NAMES)},
            "state_layout": STATE_LAYOUT,
            "palette": palette,
            "envs": ENV_IDS,
        })]

    # -- helpers ---------------------------------------------------------

    def _require_env(self) -> Env:
        if self.env is None:
            raise NoEnvironmentError("no environment; send 'make' first")
        return self.env

    def _obs_message(self, env: Env, obs, info) -> bytes:
        payload = obs.frame.tobytes() + obs.mask.tobytes()
        header = {
            "type": "obs",
            "w": env.config.width,
            "h": env.config.height,
            "state": [float(x) for x in obs.state],
            "info": _info_dict(info) if info is not None else {},
        }
        return protocol.encode_message(header, payload)

    def _error(self, code: str, detail: str) -> bytes:
        return protocol.encode_message({"type": "error", "code": code,
                                        "detail": detail})


def _info_dict(info) -> dict:
    return {"step": info.step, "active_bugs": info.active_bugs,
            "flags": info.flags, "done": info.done}


class BugServer:
    def __init__(self, host: str = "127.0.0.1", port: int = 8723,
                 default_env: Optional[str] = None,
                 default_config: Optional[dict] = None,
                 default_seed: Optional[int] = None,
                 viewer_dir: Optional[str] = None):
        self.host = host
        self.port = port
        self.default_env = default_env
        self.default_config = default_config
        self.default_seed = default_seed
        self.viewer_dir = Path(viewer_dir) if viewer_dir else None
        self._sock: Optional[socket.socket] = None
        self._stop = threading.Event()

    def start(self) -> None:
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((self.host, self.port))
        if self.port == 0:
            self.port = self._sock.getsockname()[1]
        self._sock.listen(8)

    def serve_forever(self) -> None:
        if self._sock is None:
            self.start()
        while not self._stop.is_set():
            try:
                conn, _ = self._sock.accept()
            except OSError:
                break
            t = threading.Thread(target=self._handle_conn, args=(conn,),
                                 daemon=True)
            t.start()

    def stop(self) -> None:
        self._stop.set()
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass

    # -- connection handling ------------------------------------------------

    def _handle_conn(self, conn: socket.socket) -> None:
        try:
            first = conn.recv(4, socket.MSG_PEEK)
            if first[:4] in (b"GET ", b"HEAD", b"POST"):
                self._handle_http(conn)
            else:
                self._handle_tcp(conn)
        except (OSError, MalformedMessageError):
            pass
        finally:
            try:
                conn.close()
            except OSError:
                pass

    def _new_session(self) -> Session:
        return Session(self.default_env, self.default_config, self.default_seed)

    def _handle_tcp(self, conn: socket.socket) -> None:
        session = self._new_session()

        def read_exactly(n: int):
            buf = b""
            while len(buf) < n:
                chunk = conn.recv(n - len(buf))
                if not chunk:
                    return None if not buf else buf
                buf += chunk
            return buf

        while True:
            msg = protocol.read_message(read_exactly)
            if msg is None:
                return
            header, payload = msg
            for resp in session.handle(header, payload):
                conn.sendall(resp)

    # -- HTTP / WebSocket ---------------------------------------------------

    def _handle_http(self, conn: socket.socket) -> None:
        data = b""
        while b"\r\n\r\n" not in data:
            chunk = conn.recv(4096)
            if not chunk:
                return
            data += chunk
            if len(data) > 65536:
                return
        head, rest = data.split(b"\r\n\r\n", 1)
        lines = head.decode("latin-1").split("\r\n")
        method, path, _ = lines[0].split(" ", 2)
        headers = {}
        for line in lines[1:]:
            if ":" in line:
                k, v = line.split(":", 1)
                headers[k.strip().lower()] = v.strip()

        if path == "/ws" and headers.get("upgrade", "").lower() == "websocket":
            self._handle_ws(conn, headers, rest)
            return
        self._serve_static(conn, method, path)

    def _serve_static(self, conn: socket.socket, method: str, path: str) -> None:
        if self.viewer_dir is None:
            conn.sendall(b"HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\n\r\n")
            return
        rel = path.split("?", 1)[0].lstrip("/") or "index.html"
        target = (self.viewer_dir / rel).resolve()
        root = self.viewer_dir.resolve()
        if not str(target).startswith(str(root)) or not target.is_file():
            conn.sendall(b"HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\n\r\n")
            return
        body = target.read_bytes()
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        hdr = (f"HTTP/1.1 200 OK\r\nContent-Type: {ctype}\r\n"
               f"Content-Length: {len(body)}\r\n\r\n").encode()
        conn.sendall(hdr + body)

    def _handle_ws(self, conn: socket.socket, headers: dict, buffered: bytes) -> None:
        key = headers.get("sec-websocket-key", "")
        accept = base64.b64encode(
            hashlib.sha1((key + WS_GUID).encode()).digest()).decode()
        conn.sendall((
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {accept}\r\n\r\n").encode())
        session = self._new_session()
        buf = bytearray(buffered)

        def fill(n: int) -> bool:
            while len(buf) < n:
                chunk = conn.recv(65536)
                if not chunk:
                    return False
                buf.extend(chunk)
            return True

        while True:
            if not fill(2):
                return
            b0, b1 = buf[0], buf[1]
            opcode = b0 & 0x0F
            masked = bool(b1 & 0x80)
            ln = b1 & 0x7F
            pos = 2
            if ln == 126:
                if not fill(pos + 2):
                    return
                ln = struct.unpack(">H", bytes(buf[pos:pos + 2]))[0]
                pos += 2
            elif ln == 127:
                if not fill(pos + 8):
                    return
                ln = struct.unpack(">Q", bytes(buf[pos:pos + 8]))[0]
                pos += 8
            mask = b""
            if masked:
                if not fill(pos + 4):
                    return
                mask = bytes(buf[pos:pos + 4])
                pos += 4
            if not fill(pos + ln):
                return
            body = bytes(buf[pos:pos + ln])
            del buf[:pos + ln]
            if masked:
                body = bytes(c ^ mask[i % 4] for i, c in enumerate(body))

            if opcode == 0x8:  # close
                conn.sendall(_ws_frame(0x8, b""))
                return
            if opcode == 0x9:  # ping
                conn.sendall(_ws_frame(0xA, body))
                continue
            if opcode not in (0x1, 0x2):
                continue
            try:
                header, payload = protocol.decode_message(body)
            except MalformedMessageError as e:
                conn.sendall(_ws_frame(0x2, protocol.encode_message(
                    {"type": "error", "code": "MALFORMED", "detail": str(e)})))
                return
            for resp in session.handle(header, payload):
                conn.sendall(_ws_frame(0x2, resp))


def _ws_frame(opcode: int, body: bytes) -> bytes:
    head = bytes([0x80 | opcode])
    n = len(body)
    if n < 126:
        head += bytes([n])
    elif n < (1 << 16):
        head += bytes([126]) + struct.pack(">H", n)
    else:
        head += bytes([127]) + struct.pack(">Q", n)
    return head + body


def serve(host: str = "127.0.0.1", port: int = 8723,
          default_env: Optional[str] = None, default_config: Optional[dict] = None,
          default_seed: Optional[int] = None, viewer_dir: Optional[str] = None):
    port = int(os.environ.get("BUGWORLD_PORT", port))
    server = BugServer(host, port, default_env, default_config, default_seed,
                       viewer_dir)
    server.start()
    return server
