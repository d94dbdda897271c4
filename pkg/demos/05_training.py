#!/usr/bin/env python3
"""A small on-policy training run on the oval track.

Full-scale runs use the CLI (`agvsim train --env oval --task racing
--steps 200000 --seed 42 --out runs/r1`); this demo trains for ~25k steps in
about ten seconds to show the moving parts: rollout collection, advantage
estimation, clipped-surrogate updates, and the returns log.
"""

import os

import numpy as np

from agvsim import trainer
from agvsim.envcore import Env, EnvConfig

env_cfg = EnvConfig(preset="oval", task="racing", seed=42)
ppo = trainer.PpoConfig(total_steps=24_576, seed=42)   # 12 x 2048-step horizons
params, log = trainer.train(lambda: Env(env_cfg), ppo)

returns = log.returns
quarter = max(1, len(returns) // 4)
print(f"{len(returns)} episodes; mean return first quarter "
      f"{np.mean(returns[:quarter]):.1f}, last quarter {np.mean(returns[-quarter:]):.1f}")

os.makedirs("demo_out", exist_ok=True)
log.write("demo_out/returns.csv")
trainer.save_policy("demo_out/policy.json", params)
print("wrote demo_out/returns.csv and demo_out/policy.json")

# Greedy (mean-action) evaluation from a few seeded spawns.
env = Env(env_cfg)
for spawn in range(3):
    obs = env.reset(spawn)
    steps, total = 0, 0.0
    while steps < 1500:
        result = env.step(trainer.greedy_action(params, obs.vector()))
        steps += 1
        total += result.reward
        if result.terminated or result.truncated:
            break
        obs = result.observation
    outcome = "collision" if result.terminated else "ok"
    print(f"spawn {spawn}: {steps} steps, return {total:.1f} ({outcome})")

# Policies round-trip through their JSON file bitwise.
loaded = trainer.load_policy("demo_out/policy.json")
assert np.array_equal(trainer.params_to_vector(loaded),
                      trainer.params_to_vector(params))
print("policy file round trip ok")
