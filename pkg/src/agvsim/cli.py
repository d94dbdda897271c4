"""Operator entry points: train, rollout, serve, and scene tooling.

Every command is deterministic given its flags; all artifacts are written
atomically. Exit codes: 0 ok, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import envserver, presets, trainer
from .envcore import (Env, EnvConfig, TrajectoryLog, env_config_from_json,
                      env_config_to_json)
from .fileio import atomic_write_text
from .scenegraph import (SceneParseError, SceneValidationError, parse_scene,
                         scene_to_json)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _env_config(args) -> EnvConfig:
    cfg = EnvConfig(preset=args.env, task=args.task, seed=args.seed)
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as f:
            cfg = env_config_from_json(f.read(), base=cfg)
    return cfg


def cmd_train(args) -> int:
    env_cfg = _env_config(args)
    ppo_cfg = trainer.PpoConfig(
        total_steps=args.steps, horizon=args.horizon, minibatch=args.minibatch,
        epochs=args.epochs, clip_eps=args.clip, gamma=args.gamma, lam=args.lam,
        lr=args.lr, ent_coef=args.ent_coef, seed=args.seed)
    hidden = tuple(int(h) for h in args.hidden.split(",") if h)
    params, log = trainer.train(lambda: Env(env_cfg), ppo_cfg, hidden=hidden,
                                log_std_init=args.log_std_init)
    os.makedirs(args.out, exist_ok=True)
    trainer.save_policy(os.path.join(args.out, "policy.json"), params)
    log.write(os.path.join(args.out, "returns.csv"))
    snapshot = {
        "env": json.loads(env_config_to_json(env_cfg)),
        "ppo": {"total_steps": ppo_cfg.total_steps, "horizon": ppo_cfg.horizon,
                "minibatch": ppo_cfg.minibatch, "epochs": ppo_cfg.epochs,
                "clip_eps": ppo_cfg.clip_eps, "gamma": ppo_cfg.gamma,
                "lam": ppo_cfg.lam, "lr": ppo_cfg.lr,
                "ent_coef": ppo_cfg.ent_coef, "seed": ppo_cfg.seed},
        "hidden": list(hidden),
        "log_std_init": args.log_std_init,
    }
    atomic_write_text(os.path.join(args.out, "config.json"),
                      json.dumps(snapshot, indent=2) + "\n")
    print(f"trained {ppo_cfg.total_steps} steps, {len(log.episodes)} episodes "
          f"-> {args.out}")
    return EXIT_OK


def run_episode(env: Env, params, seed: int, log: TrajectoryLog | None = None):
    """One greedy (mean-action) episode; returns (return, length, collided)."""
    obs = env.reset(seed)
    total, steps, collided = 0.0, 0, False
    t_s = env.params.timestep
    while True:
        action = trainer.greedy_action(params, obs.vector())
        result = env.step(action)
        steps += 1
        total += result.reward
        if log is not None:
            log.append(steps, steps * t_s, action, result)
        obs = result.observation
        if result.terminated or result.truncated:
            return total, steps, result.terminated


def cmd_rollout(args) -> int:
    try:
        params = trainer.load_policy(args.policy)
    except (OSError, ValueError, KeyError) as e:
        print(f"error: cannot load policy {args.policy}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    env_cfg = _env_config(args)
    env = Env(env_cfg)
    if params.obs_dim != env.obs_dim:
        print(f"error: policy obs_dim {params.obs_dim} != environment obs_dim "
              f"{env.obs_dim}", file=sys.stderr)
        return EXIT_RUNTIME
    os.makedirs(args.out, exist_ok=True)
    summary = ["episode,seed,return,length,collided"]
    for ep in range(args.episodes):
        seed = args.seed + ep
        log = TrajectoryLog()
        total, steps, collided = run_episode(env, params, seed, log)
        log.write(os.path.join(args.out, f"traj_{ep:03d}.csv"))
        summary.append(f"{ep},{seed},{total!r},{steps},{str(collided).lower()}")
    atomic_write_text(os.path.join(args.out, "summary.csv"), "\n".join(summary) + "\n")
    print(f"rolled out {args.episodes} episodes -> {args.out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    env_cfg = _env_config(args)
    try:
        server = envserver.EnvServer(env_cfg, host=args.host, port=args.port,
                                     idle_timeout=args.idle_timeout)
    except OSError as e:
        print(f"error: cannot bind {args.host}:{args.port}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    host, port = server.address
    print(f"agvsim environment server listening on {host}:{port} "
          f"(preset={env_cfg.preset}, task={env_cfg.task})", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.stop()
    return EXIT_OK


def cmd_scene(args) -> int:
    if args.scene_cmd == "validate":
        try:
            with open(args.file, "r", encoding="utf-8") as f:
                scene = parse_scene(f.read())
        except OSError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_RUNTIME
        except (SceneParseError, SceneValidationError) as e:
            print(f"invalid scene: {e}", file=sys.stderr)
            return EXIT_RUNTIME
        n_user = len(scene.obstacles) - len(scene.boundary_ids)
        print(f"ok: {scene.name!r}: {n_user} obstacles + "
              f"{len(scene.boundary_ids)} boundary walls, bounds {scene.bounds}")
        return EXIT_OK
    # gen
    scene = presets.build_scene(args.preset, args.seed)
    atomic_write_text(args.out, scene_to_json(scene) + "\n")
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agvsim",
        description="Deterministic ground-vehicle simulation engine: train, "
                    "evaluate, serve, and inspect scenes.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_env_flags(p):
        p.add_argument("--env", default="outdoor20", choices=presets.PRESETS,
                       help="scene preset")
        p.add_argument("--task", default="search", choices=("search", "racing"))
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", help="environment configuration JSON "
                                        "(overrides preset fields)")

    p = sub.add_parser("train", help="train a policy and write run artifacts")
    add_env_flags(p)
    p.add_argument("--steps", type=int, default=200_000, help="total environment steps")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--horizon", type=int, default=2048)
    p.add_argument("--minibatch", type=int, default=64)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--clip", type=float, default=0.2)
    p.add_argument("--gamma", type=float, default=0.99)
    p.add_argument("--lam", type=float, default=0.95)
    p.add_argument("--lr", type=float, default=3e-4)
    p.add_argument("--ent-coef", type=float, default=0.0)
    p.add_argument("--hidden", default="64,64", help="hidden sizes, comma separated")
    p.add_argument("--log-std-init", type=float, default=-1.0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("rollout", help="run greedy evaluation episodes from a policy file")
    add_env_flags(p)
    p.add_argument("--policy", required=True, help="policy JSON file")
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("serve", help="serve the environment over TCP")
    add_env_flags(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=envserver.DEFAULT_PORT)
    p.add_argument("--idle-timeout", type=float, default=None)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("scene", help="scene tooling")
    scene_sub = p.add_subparsers(dest="scene_cmd", required=True)
    v = scene_sub.add_parser("validate", help="parse and validate a scene file")
    v.add_argument("file")
    v.set_defaults(func=cmd_scene)
    g = scene_sub.add_parser("gen", help="materialize a procedural preset")
    g.add_argument("--preset", required=True, choices=presets.PRESETS)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_scene)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
