#!/usr/bin/env python3
"""Driving the engine over the network protocol.

The server speaks length-prefixed JSON frames (4-byte big-endian size +
UTF-8 body with a "cmd" field). Each connection owns one environment, so an
external RL stack can train out-of-process. This demo starts a server in a
background thread and talks to it with a raw socket.
"""

import json
import socket

from agvsim.envcore import Env, EnvConfig
from agvsim.envserver import EnvServer, recv_frame, send_frame
from agvsim.vehicle import Action

cfg = EnvConfig(preset="urban20", task="search", seed=42, max_steps=300)
server = EnvServer(cfg, host="127.0.0.1", port=0)   # port 0: pick a free port
server.start()
host, port = server.address
print(f"server on {host}:{port}")

sock = socket.create_connection((host, port))

def rpc(obj):
    send_frame(sock, obj)
    return json.loads(recv_frame(sock))

spec = rpc({"cmd": "spec"})
print("spec:", spec)
assert spec["act_dim"] == 2

remote = rpc({"cmd": "reset", "seed": 7})
print(f"reset: t={remote['t']}, obs dim {len(remote['obs'])}")

# The wire transcript equals the in-process engine value-for-value, because
# floats serialize with shortest round-trip decimals.
local = Env(cfg)
local_obs = local.reset(7)
assert remote["obs"] == local_obs.vector().tolist()

for i in range(5):
    action = [0.8, 0.1 * (i - 2)]
    reply = rpc({"cmd": "step", "action": action})
    result = local.step(Action(*action))
    assert reply["obs"] == result.observation.vector().tolist()
    assert reply["reward"] == result.reward
    print(f"step {i}: reward {reply['reward']:+.3f}, r_m {reply['info']['r_m']:.2f}")

# Protocol errors are replies, not dropped connections.
bad = rpc({"cmd": "step", "action": "left"})
assert "error" in bad
print("malformed action ->", bad["error"])

assert rpc({"cmd": "close"}) == {"ok": True}
sock.close()
server.stop()
print("closed cleanly")
