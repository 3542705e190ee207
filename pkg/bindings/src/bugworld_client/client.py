"""Remote environment over the bugworld socket protocol."""

from __future__ import annotations

import socket
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import protocol

ENV_IDS = ("StaticRoom-v0", "Maze-v0", "GettingStuck-v0")


class RemoteError(Exception):
    """Server-reported error; .code carries the wire error code."""

    def __init__(self, code: str, detail: str = ""):
        super().__init__(f"{code}: {detail}" if detail else code)
        self.code = code
        self.detail = detail


@dataclass
class RemoteObservation:
    frame: np.ndarray
    mask: np.ndarray
    state: list


@dataclass
class RemoteStepInfo:
    step: int
    active_bugs: list
    flags: dict
    done: bool


class RemoteEnv:
    """One environment per connection; methods map 1:1 to wire commands."""

    def __init__(self, host: str = "127.0.0.1", port: int = 8723,
                 env_id: str = "StaticRoom-v0",
                 config: Optional[dict] = None, timeout: float = 30.0):
        self.env_id = env_id
        self._sock = socket.create_connection((host, port), timeout=timeout)
        header = {"cmd": "make", "env_id": env_id}
        if config is not None:
            header["config"] = config
        self._request(header)

    # -- wire plumbing ---------------------------------------------------

    def _read_exactly(self, n: int):
        buf = b""
        while len(buf) < n:
            chunk = self._sock.recv(n - len(buf))
            if not chunk:
                return None if not buf else buf
            buf += chunk
        return buf

    def _recv(self):
        msg = protocol.read_message(self._read_exactly)
        if msg is None:
            raise RemoteError("CONNECTION_CLOSED", "server closed the socket")
        header, payload = msg
        if header.get("type") == "error":
            raise RemoteError(header.get("code", "UNKNOWN"),
                              header.get("detail", ""))
        return header, payload

    def _request(self, header: dict):
        self._sock.sendall(protocol.encode_message(header))
        return self._recv()

    def _decode_obs(self, header: dict, payload: bytes) -> RemoteObservation:
        w, h = int(header["w"]), int(header["h"])
        plane = w * h * 3
        if len(payload) != 2 * plane:
            raise RemoteError("BAD_PAYLOAD",
                              f"expected {2 * plane} bytes, got {len(payload)}")
        frame = np.frombuffer(payload[:plane], dtype=np.uint8).reshape(h, w, 3)
        mask = np.frombuffer(payload[plane:], dtype=np.uint8).reshape(h, w, 3)
        return RemoteObservation(frame, mask, list(header["state"]))

    @staticmethod
    def _decode_info(info: dict) -> RemoteStepInfo:
        return RemoteStepInfo(int(info.get("step", 0)),
                              list(info.get("active_bugs", [])),
                              dict(info.get("flags", {})),
                              bool(info.get("done", False)))

    # -- API -------------------------------------------------------------

    def reset(self, seed: int = 0) -> RemoteObservation:
        header, payload = self._request({"cmd": "reset", "seed": int(seed)})
        return self._decode_obs(header, payload)

    def step(self, action: int):
        header, payload = self._request({"cmd": "step", "action": int(action)})
        info = self._decode_info(header.get("info", {}))
        if header["type"] == "ok":          # terminal step with no frame
            return None, info
        return self._decode_obs(header, payload), info

    def set_bug(self, name: str, enabled: bool,
                params: Optional[dict] = None) -> None:
        header = {"cmd": "set_bug", "name": name, "enabled": bool(enabled)}
        if params is not None:
            header["params"] = params
        self._request(header)

    def list_bugs(self) -> list:
        header, _ = self._request({"cmd": "list_bugs"})
        return header["bugs"]

    def set_behaviour(self, name: str) -> None:
        self._request({"cmd": "set_behaviour", "name": name})

    def spec(self) -> dict:
        header, _ = self._request({"cmd": "spec"})
        return header

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def gym_id(env_id: str) -> str:
    """Gym-compatible registration name for a bugworld environment id."""
    if env_id not in ENV_IDS:
        raise ValueError(f"unknown environment id: {env_id}")
    return f"BugWorld/{env_id}"


def register_gym_envs(host: str = "127.0.0.1", port: int = 8723) -> list:
    """Register all environments with gymnasium, when it is installed.

    Returns the list of registered gym ids.
    """
    import gymnasium as gym

    registered = []
    for env_id in ENV_IDS:
        name = gym_id(env_id)
        gym.register(id=name, entry_point=_GymAdapter,
                     kwargs={"host": host, "port": port, "env_id": env_id})
        registered.append(name)
    return registered


class _GymAdapter:
    """Minimal gymnasium Env adapter over RemoteEnv."""

    metadata = {"render_modes": []}

    def __init__(self, host, port, env_id, config=None, **kwargs):
        self.remote = RemoteEnv(host, port, env_id, config)

    def reset(self, *, seed=None, options=None):
        obs = self.remote.reset(seed or 0)
        return (obs.frame, obs.mask, obs.state), {}

    def step(self, action):
        obs, info = self.remote.step(action)
        payload = None if obs is None else (obs.frame, obs.mask, obs.state)
        return payload, 0.0, info.done, False, {"flags": info.flags}

    def close(self):
        self.remote.close()
