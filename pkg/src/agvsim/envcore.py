"""Episodic driving environment: presets, reset/step loop, observations, rewards, termination.

One step clamps the action, advances the joint speed and pose by one sampling
interval, scans the LiDAR, evaluates the task reward on the minimum range, and
checks termination (minimum range under the collision radius) and truncation
(step cap). Identical (config, seed, action sequence) triples reproduce the
StepResult sequence bitwise.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import presets
from .fileio import atomic_write_text
from .scenegraph import Scene, point_clearance
from .sensors import LidarConfig, LidarScan, lidar_scan
from .vehicle import (Action, ControlInput, VehicleParams, VehicleState,
                      clamp_action, step_joint_speed, step_pose,
                      steady_state_joint_speed)

TASKS = ("search", "racing")
REWARD_MODES = ("exclusive", "additive")

SEARCH_COLLISION_RADIUS = 1.0
RACING_COLLISION_RADIUS = 0.8

SPAWN_CLEARANCE = 1.5
SPAWN_RETRIES = 1000


def reward_search(r_m: float, throttle: float, steer: float, mode: str = "exclusive") -> float:
    """Exploration reward: collision penalty, near-obstacle band bonus, quadratic base.

    Branches are exclusive top-down by default; "additive" adds the band bonus
    onto the base term instead of replacing it.
    """
    if r_m < 1.0:
        return -50.0
    base = 0.005 * r_m ** 2 + 5.0 * throttle ** 2 - 2.0 * steer ** 2
    in_band = 2.0 < r_m < 2.5
    if mode == "exclusive":
        return 2.0 if in_band else base
    return base + (2.0 if in_band else 0.0)


def reward_racing(r_m: float, throttle: float, steer: float) -> float:
    """Racing reward: collision penalty, otherwise throttle bonus minus steering cost."""
    if r_m < 0.8:
        return -50.0
    return 5.0 * throttle ** 2 - 2.0 * steer ** 2


@dataclass(frozen=True)
class EnvConfig:
    preset: str = "outdoor20"
    task: str = "search"
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    lidar: LidarConfig = field(default_factory=LidarConfig)
    max_steps: int = 2000
    collision_radius: float | None = None   # None: task penalty radius
    seed: int = 0
    reward_mode: str = "exclusive"

    def __post_init__(self):
        if self.preset not in presets.PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}")
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.collision_radius is not None and not self.collision_radius > 0:
            raise ValueError("collision_radius must be > 0")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.reward_mode not in REWARD_MODES:
            raise ValueError(f"reward_mode must be one of {REWARD_MODES}")

    @property
    def resolved_collision_radius(self) -> float:
        if self.collision_radius is not None:
            return self.collision_radius
        return SEARCH_COLLISION_RADIUS if self.task == "search" else RACING_COLLISION_RADIUS


@dataclass(frozen=True)
class Observation:
    ranges_norm: np.ndarray          # n values in (0, 1]
    speed_norm: float                # in [-1, 1]
    prev_action: tuple[float, float]

    def vector(self) -> np.ndarray:
        return np.concatenate([self.ranges_norm,
                               [self.speed_norm, self.prev_action[0], self.prev_action[1]]])


@dataclass(frozen=True)
class StepResult:
    observation: Observation
    reward: float
    terminated: bool
    truncated: bool
    info: dict


@dataclass(frozen=True)
class EpisodeStats:
    ep_return: float
    length: int
    collided: bool


class Env:
    """Single-agent episodic environment; one instance per thread of use."""

    def __init__(self, cfg: EnvConfig):
        self.cfg = cfg
        self.scene: Scene = presets.build_scene(cfg.preset, cfg.seed)
        self.params = cfg.vehicle
        self.lidar = cfg.lidar
        self.collision_radius = cfg.resolved_collision_radius
        self.speed_cap = steady_state_joint_speed(1.0, cfg.vehicle) * cfg.vehicle.wheel_radius
        self._spawn_rng = np.random.default_rng(cfg.seed)
        self._state: VehicleState | None = None
        self._prev_action = (0.0, 0.0)
        self._steps = 0
        self._done = True

    @property
    def obs_dim(self) -> int:
        return self.lidar.n_rays + 3

    @property
    def done(self) -> bool:
        return self._done

    @property
    def state(self) -> VehicleState:
        if self._state is None:
            raise RuntimeError("environment has not been reset")
        return self._state

    def reset(self, seed: int | None = None) -> Observation:
        """Place the vehicle at a seeded collision-free spawn at rest and observe."""
        if seed is not None:
            self._spawn_rng = np.random.default_rng(seed)
        rng = self._spawn_rng
        xmin, xmax, ymin, ymax = self.scene.bounds
        m = SPAWN_CLEARANCE
        for _ in range(SPAWN_RETRIES):
            x = float(rng.uniform(xmin + m, xmax - m))
            y = float(rng.uniform(ymin + m, ymax - m))
            if self.cfg.preset == "oval" and not presets.in_oval_corridor(x, y):
                continue
            if point_clearance(self.scene, x, y) > SPAWN_CLEARANCE:
                yaw = presets.spawn_yaw(self.cfg.preset, x, y, rng)
                break
        else:
            raise RuntimeError(
                f"no collision-free spawn found in {SPAWN_RETRIES} tries "
                f"(preset {self.cfg.preset!r}, clearance {SPAWN_CLEARANCE} m)")
        self._state = VehicleState.from_pose(x, y, yaw)
        self._prev_action = (0.0, 0.0)
        self._steps = 0
        self._done = False
        scan = lidar_scan(self.scene, self._state, self.params, self.lidar)
        return self._observe(scan)

    def _observe(self, scan: LidarScan) -> Observation:
        return Observation(
            ranges_norm=scan.ranges / self.lidar.r_max,
            speed_norm=self._state.joint_speed * self.params.wheel_radius / self.speed_cap,
            prev_action=self._prev_action,
        )

    def step(self, action: Action) -> StepResult:
        """Advance exactly one sampling interval; errors after episode end."""
        if self._state is None:
            raise RuntimeError("step before reset")
        if self._done:
            raise RuntimeError("step after episode end; call reset")
        control = clamp_action(action, self.params)
        v_new = step_joint_speed(self._state.joint_speed, control.throttle, self.params)
        moving = dataclasses.replace(self._state, joint_speed=v_new)
        self._state = step_pose(moving, control, self.params)
        scan = lidar_scan(self.scene, self._state, self.params, self.lidar)
        r_m = scan.r_min
        if self.cfg.task == "search":
            reward = reward_search(r_m, control.throttle, control.steer_angle,
                                   self.cfg.reward_mode)
        else:
            reward = reward_racing(r_m, control.throttle, control.steer_angle)
        self._steps += 1
        terminated = r_m < self.collision_radius
        truncated = self._steps >= self.cfg.max_steps
        self._done = terminated or truncated
        self._prev_action = (action.throttle, action.steering)
        x, y, _ = self._state.position
        info = {
            "r_m": r_m, "x": x, "y": y, "psi": self._state.yaw,
            "v_joint": v_new, "T": control.throttle, "delta": control.steer_angle,
        }
        return StepResult(observation=self._observe(scan), reward=reward,
                          terminated=terminated, truncated=truncated, info=info)


def make_env(cfg: EnvConfig) -> Env:
    """Construct the preset environment; same (preset, seed) gives identical scenes."""
    return Env(cfg)


# --- trajectory log --------------------------------------------------------

TRAJECTORY_HEADER = ("step,t,x,y,psi,v_joint,a_T,a_delta,T,delta,"
                     "r_m,reward,terminated,truncated")


class TrajectoryLog:
    """Per-step CSV rows with round-trip float precision."""

    def __init__(self):
        self.rows: list[str] = []

    def append(self, step: int, t: float, action: Action, result: StepResult) -> None:
        i = result.info
        vals = [i["x"], i["y"], i["psi"], i["v_joint"], action.throttle, action.steering,
                i["T"], i["delta"], i["r_m"], result.reward]
        self.rows.append(
            f"{step},{t!r},"
            + ",".join(repr(float(v)) for v in vals)
            + f",{str(result.terminated).lower()},{str(result.truncated).lower()}")

    def text(self) -> str:
        return "\n".join([TRAJECTORY_HEADER] + self.rows) + "\n"

    def write(self, path) -> None:
        atomic_write_text(path, self.text())


# --- configuration documents ------------------------------------------------


def _apply_known(cls, data, loc):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ValueError(f"{loc}: unknown keys {sorted(unknown)}")
    return data


def env_config_from_json(text: str, base: EnvConfig | None = None) -> EnvConfig:
    """Build an EnvConfig from a JSON document; absent fields keep their defaults.

    Unknown keys are rejected at every level. Pass ``base`` to layer the
    document's fields over an existing configuration.
    """
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise ValueError("environment configuration: expected a JSON object")
    base = base or EnvConfig()
    kwargs = dataclasses.asdict(base)
    # asdict recurses; rebuild the nested dataclasses explicitly
    kwargs["vehicle"] = base.vehicle
    kwargs["lidar"] = base.lidar
    _apply_known(EnvConfig, doc, "config")
    for key, value in doc.items():
        if key == "vehicle":
            sub = _apply_known(VehicleParams, dict(value), "config.vehicle")
            merged = {f.name: getattr(base.vehicle, f.name)
                      for f in dataclasses.fields(VehicleParams)}
            for k, v in sub.items():
                merged[k] = tuple(v) if k == "lidar_mount" else v
            kwargs["vehicle"] = VehicleParams(**merged)
        elif key == "lidar":
            sub = _apply_known(LidarConfig, dict(value), "config.lidar")
            merged = {f.name: getattr(base.lidar, f.name)
                      for f in dataclasses.fields(LidarConfig)}
            merged.update(sub)
            kwargs["lidar"] = LidarConfig(**merged)
        else:
            kwargs[key] = value
    return EnvConfig(**kwargs)


def env_config_to_json(cfg: EnvConfig) -> str:
    doc = {
        "preset": cfg.preset,
        "task": cfg.task,
        "vehicle": dataclasses.asdict(cfg.vehicle),
        "lidar": dataclasses.asdict(cfg.lidar),
        "max_steps": cfg.max_steps,
        "collision_radius": cfg.collision_radius,
        "seed": cfg.seed,
        "reward_mode": cfg.reward_mode,
    }
    doc["vehicle"]["lidar_mount"] = list(cfg.vehicle.lidar_mount)
    return json.dumps(doc, indent=2)
