"""Remote environment handle speaking the agvsim wire protocol.

One frame is a 4-byte big-endian unsigned length followed by a UTF-8 JSON
object. The client is blocking and strictly request/response: request i's
reply is read before request i+1 is sent, so frames are never reordered or
dropped. Floats pass through ``json`` untouched in both directions, which
preserves the server's shortest-round-trip decimal values exactly.

A handle wraps one connection and therefore one server-side environment; it
is not safe for concurrent use, but independent handles are independent
environments.
"""

from __future__ import annotations

import json
import socket
import struct
from dataclasses import dataclass


class ProtocolError(RuntimeError):
    """Server answered with an error object or broke the framing contract."""


@dataclass(frozen=True)
class EnvSpec:
    obs_dim: int
    act_dim: int
    preset: str
    task: str
    max_steps: int


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ProtocolError("server closed the connection mid-reply")
        buf.extend(chunk)
    return bytes(buf)


class RemoteEnvHandle:
    """Episodic environment backed by a server connection.

    Use :func:`connect` to build one; the environment spec is fetched during
    the handshake and cached on the handle.
    """

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._episode_live = False
        self.spec = EnvSpec(**self._request({"cmd": "spec"}))

    def _request(self, obj: dict) -> dict:
        body = json.dumps(obj, separators=(",", ":")).encode("utf-8")
        self._sock.sendall(struct.pack(">I", len(body)) + body)
        (length,) = struct.unpack(">I", _recv_exact(self._sock, 4))
        reply = json.loads(_recv_exact(self._sock, length).decode("utf-8"))
        if not isinstance(reply, dict):
            raise ProtocolError(f"expected an object reply, got {type(reply).__name__}")
        if "error" in reply:
            raise ProtocolError(reply["error"])
        return reply

    def reset(self, seed: int | None = None) -> list[float]:
        """Start an episode; returns the observation as a flat list of floats."""
        msg = {"cmd": "reset"}
        if seed is not None:
            msg["seed"] = seed
        reply = self._request(msg)
        obs = reply["obs"]
        if len(obs) != self.spec.obs_dim:
            raise ProtocolError(
                f"observation length {len(obs)} != spec obs_dim {self.spec.obs_dim}")
        self._episode_live = True
        return obs

    def step(self, action) -> tuple[list[float], float, bool, bool, dict]:
        """One step; returns (observation, reward, terminated, truncated, info)."""
        a = list(action)
        if len(a) != self.spec.act_dim:
            raise ValueError(f"action must have {self.spec.act_dim} components")
        if not self._episode_live:
            raise ProtocolError("step refused: no live episode, call reset first")
        reply = self._request({"cmd": "step", "action": [float(a[0]), float(a[1])]})
        if reply["terminated"] or reply["truncated"]:
            self._episode_live = False
        return (reply["obs"], reply["reward"], reply["terminated"],
                reply["truncated"], reply["info"])

    def close(self) -> None:
        try:
            self._request({"cmd": "close"})
        except (OSError, ProtocolError):
            pass
        finally:
            self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def connect(host: str, port: int, timeout: float | None = 30.0) -> RemoteEnvHandle:
    """Open a connection and fetch the environment spec.

    Connection failures surface as the underlying OSError
    (ConnectionRefusedError, timeout, ...).
    """
    sock = socket.create_connection((host, port), timeout=timeout)
    return RemoteEnvHandle(sock)
