"""Network environment service: length-prefixed JSON frames over TCP.

Each frame is a 4-byte big-endian unsigned byte count followed by a UTF-8 JSON
object with a mandatory "cmd" field ("spec", "reset", "step", "close"). Every
connection owns one environment instance; requests are answered strictly in
order, and malformed requests get an {"error": ...} reply without dropping the
connection. Floats serialize with shortest round-trip decimals, so remote
transcripts equal in-process results value-for-value.
"""

from __future__ import annotations

import json
import socket
import struct
import threading

from .envcore import Env, EnvConfig
from .vehicle import Action

DEFAULT_PORT = 7878
COMMANDS = ("spec", "reset", "step", "close")


def send_frame(sock: socket.socket, obj: dict) -> None:
    body = json.dumps(obj, separators=(",", ":")).encode("utf-8")
    sock.sendall(struct.pack(">I", len(body)) + body)


def _recv_exact(sock: socket.socket, n: int) -> bytes | None:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            return None
        buf.extend(chunk)
    return bytes(buf)


def recv_frame(sock: socket.socket):
    """One framed payload as raw bytes, or None on a clean disconnect."""
    header = _recv_exact(sock, 4)
    if header is None:
        return None
    (length,) = struct.unpack(">I", header)
    body = _recv_exact(sock, length)
    return body


class EnvServer:
    """Accepts connections concurrently; each handler confines its own Env."""

    def __init__(self, cfg: EnvConfig, host: str = "127.0.0.1",
                 port: int = DEFAULT_PORT, idle_timeout: float | None = None):
        self.cfg = cfg
        self.idle_timeout = idle_timeout
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen()
        self._stop = threading.Event()
        self._accept_thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._sock.getsockname()[:2]

    def start(self) -> None:
        """Serve in a background thread (used by tests and embedding)."""
        self._accept_thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._accept_thread.start()

    def serve_forever(self) -> None:
        self._sock.settimeout(0.2)
        try:
            while not self._stop.is_set():
                try:
                    conn, _ = self._sock.accept()
                except socket.timeout:
                    continue
                except OSError:
                    break
                threading.Thread(target=self._handle, args=(conn,), daemon=True).start()
        finally:
            self._sock.close()

    def stop(self) -> None:
        self._stop.set()
        if self._accept_thread is not None:
            self._accept_thread.join(timeout=5.0)

    def _handle(self, conn: socket.socket) -> None:
        env = Env(self.cfg)
        if self.idle_timeout is not None:
            conn.settimeout(self.idle_timeout)
        try:
            while True:
                body = recv_frame(conn)
                if body is None:
                    return
                try:
                    reply, closing = self._dispatch(env, body)
                except (ValueError, RuntimeError) as e:
                    reply, closing = {"error": str(e)}, False
                send_frame(conn, reply)
                if closing:
                    return
        except (socket.timeout, OSError):
            return
        finally:
            conn.close()

    def _dispatch(self, env: Env, body: bytes):
        try:
            msg = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise ValueError(f"malformed frame: {e}") from None
        if not isinstance(msg, dict) or "cmd" not in msg:
            raise ValueError('malformed frame: expected an object with a "cmd" field')
        cmd = msg["cmd"]
        if cmd == "spec":
            return ({"obs_dim": env.obs_dim, "act_dim": 2, "preset": self.cfg.preset,
                     "task": self.cfg.task, "max_steps": self.cfg.max_steps}, False)
        if cmd == "reset":
            seed = msg.get("seed")
            if seed is not None and not isinstance(seed, int):
                raise ValueError('"seed" must be an integer')
            obs = env.reset(seed)
            return {"obs": obs.vector().tolist(), "t": 0}, False
        if cmd == "step":
            action = msg.get("action")
            if (not isinstance(action, list) or len(action) != 2
                    or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                               for v in action)):
                raise ValueError('"action" must be a pair of numbers')
            result = env.step(Action(float(action[0]), float(action[1])))
            return ({"obs": result.observation.vector().tolist(),
                     "reward": result.reward,
                     "terminated": result.terminated,
                     "truncated": result.truncated,
                     "info": result.info}, False)
        if cmd == "close":
            return {"ok": True}, True
        raise ValueError(f"unknown cmd {cmd!r}")


def serve(cfg: EnvConfig, host: str = "127.0.0.1", port: int = DEFAULT_PORT,
          idle_timeout: float | None = None) -> EnvServer:
    """Bind and return a started server; raises OSError if the port is unavailable."""
    server = EnvServer(cfg, host, port, idle_timeout)
    server.start()
    return server
