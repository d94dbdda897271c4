"""Ackermann vehicle model: action clamping, resistive joint-speed update, planar pose integration.

Normalized policy actions are converted to a throttle in [0, 1] and a steering
angle within the steering limits. The driven joints share one angular speed,
integrated by explicit Euler from throttle acceleration minus a speed-dependent
resistive term. The pose follows the kinematic bicycle model; the planar model
keeps z, roll, and pitch frozen at their spawn values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .rotations import quat_from_euler, quat_to_euler, wrap_angle


def _require_finite(name, value):
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class VehicleParams:
    """Physical constants; defaults model a 1/10-scale car and are all overridable."""

    wheelbase: float = 0.32             # m
    wheel_radius: float = 0.05          # m
    drag: float = 0.01                  # quadratic resistive constant, 1/m
    rolling_resistance: float = 0.1     # linear resistive constant, 1/s
    throttle_gain: float = 20.0         # joint acceleration at full throttle, rad/s^2
    timestep: float = 0.01              # sampling time, s
    steer_min: float = -0.6             # rad
    steer_max: float = 0.6              # rad
    lidar_mount: tuple[float, float, float] = (0.1, 0.0, 0.15)  # body frame, m
    lidar_mount_yaw: float = math.pi / 4.0

    def __post_init__(self):
        if self.wheelbase <= 0 or self.wheel_radius <= 0:
            raise ValueError("wheelbase and wheel_radius must be > 0")
        if self.drag < 0 or self.rolling_resistance < 0:
            raise ValueError("resistive constants must be >= 0")
        if self.throttle_gain <= 0 or self.timestep <= 0:
            raise ValueError("throttle_gain and timestep must be > 0")
        if not self.steer_min < 0 < self.steer_max:
            raise ValueError("need steer_min < 0 < steer_max")


@dataclass(frozen=True)
class VehicleState:
    """Plain value; all vehicle operations are pure functions of their inputs."""

    position: tuple[float, float, float]
    quaternion: tuple[float, float, float, float]   # (x, y, z, w)
    euler: tuple[float, float, float]               # (roll, pitch, yaw)
    lin_vel: tuple[float, float, float] = (0.0, 0.0, 0.0)
    ang_vel: tuple[float, float, float] = (0.0, 0.0, 0.0)
    joint_speed: float = 0.0                        # rad/s, shared by driven joints

    @classmethod
    def from_pose(cls, x, y, yaw, z=0.0, roll=0.0, pitch=0.0,
                  lin_vel=(0.0, 0.0, 0.0), ang_vel=(0.0, 0.0, 0.0), joint_speed=0.0):
        yaw = wrap_angle(yaw)
        return cls(position=(x, y, z),
                   quaternion=quat_from_euler(roll, pitch, yaw),
                   euler=(wrap_angle(roll), pitch, yaw),
                   lin_vel=lin_vel, ang_vel=ang_vel, joint_speed=joint_speed)

    @property
    def yaw(self) -> float:
        return self.euler[2]


@dataclass(frozen=True)
class Action:
    """Normalized policy output; both components are clamped to [-1, 1] on construction."""

    throttle: float
    steering: float

    def __post_init__(self):
        _require_finite("throttle", self.throttle)
        _require_finite("steering", self.steering)
        object.__setattr__(self, "throttle", min(max(self.throttle, -1.0), 1.0))
        object.__setattr__(self, "steering", min(max(self.steering, -1.0), 1.0))


@dataclass(frozen=True)
class ControlInput:
    throttle: float        # T in [0, 1]
    steer_angle: float     # rad, within [steer_min, steer_max]


def clamp_action(a: Action, p: VehicleParams) -> ControlInput:
    """Convert a normalized action to vehicle control inputs.

    Throttle is clamped to [0, 1]; the steering component is read directly in
    radians and clamped to the steering limits.
    """
    t = min(max(a.throttle, 0.0), 1.0)
    delta = max(min(a.steering, p.steer_max), p.steer_min)
    return ControlInput(throttle=t, steer_angle=delta)


def friction(v_prev: float, p: VehicleParams) -> float:
    """Resistive deceleration from the previous joint speed: v*(v*drag + rolling)."""
    _require_finite("v_prev", v_prev)
    return v_prev * (v_prev * p.drag + p.rolling_resistance)


def step_joint_speed(v_prev: float, throttle: float, p: VehicleParams) -> float:
    """One explicit-Euler update of the shared joint speed."""
    accel = p.throttle_gain * throttle - friction(v_prev, p)
    return v_prev + p.timestep * accel


def steady_state_joint_speed(throttle: float, p: VehicleParams) -> float:
    """Closed-form fixed point of the joint-speed update (positive root)."""
    target = p.throttle_gain * throttle
    if p.drag > 0.0:
        disc = p.rolling_resistance ** 2 + 4.0 * p.drag * target
        return (-p.rolling_resistance + math.sqrt(disc)) / (2.0 * p.drag)
    if p.rolling_resistance > 0.0:
        return target / p.rolling_resistance
    return math.inf if throttle > 0 else 0.0


def step_pose(s: VehicleState, c: ControlInput, p: VehicleParams) -> VehicleState:
    """Kinematic bicycle step; velocities are the finite differences over this step."""
    x, y, z = s.position
    roll, pitch, yaw = s.euler
    v = s.joint_speed * p.wheel_radius
    dt = p.timestep
    nx = x + dt * v * math.cos(yaw)
    ny = y + dt * v * math.sin(yaw)
    dyaw = dt * v * math.tan(c.steer_angle) / p.wheelbase
    return VehicleState.from_pose(
        nx, ny, yaw + dyaw, z=z, roll=roll, pitch=pitch,
        lin_vel=((nx - x) / dt, (ny - y) / dt, 0.0),
        ang_vel=(0.0, 0.0, dyaw / dt),
        joint_speed=s.joint_speed,
    )
