#!/usr/bin/env python3
"""Vehicle actuation and motion.

Normalized actions become control inputs: throttle clamps to [0, 1] and the
steering component is read directly in radians against the steering limits.
The driven joints share one speed, integrated by explicit Euler from throttle
acceleration minus a resistive term, and the pose follows the kinematic
bicycle model.
"""

import math

from agvsim.vehicle import (Action, ControlInput, VehicleParams, VehicleState,
                            clamp_action, step_joint_speed, step_pose,
                            steady_state_joint_speed)

p = VehicleParams()   # 1/10-scale defaults; everything is overridable
print(f"wheelbase {p.wheelbase} m, wheel radius {p.wheel_radius} m, "
      f"step {p.timestep} s")

# Action components outside [-1, 1] are clamped on construction; the
# conversion then applies the throttle/steering clamps.
control = clamp_action(Action(-0.5, 1.0), p)
assert control.throttle == 0.0            # negative throttle floors at 0
assert control.steer_angle == p.steer_max  # 1.0 rad exceeds the 0.6 rad limit

# Holding half throttle, the joint speed converges to the positive root of
# drag*v^2 + rolling*v - gain*T = 0.
v = 0.0
for _ in range(20_000):
    v = step_joint_speed(v, 0.5, p)
v_star = steady_state_joint_speed(0.5, p)
print(f"joint speed after 200 s at T=0.5: {v:.4f} rad/s (closed form {v_star:.4f})")
assert abs(v - v_star) < 1e-6

# Constant steering traces a circle of radius wheelbase / tan(delta).
delta = 0.3
radius = p.wheelbase / math.tan(delta)
state = VehicleState.from_pose(0.0, 0.0, 0.0, joint_speed=1.0 / p.wheel_radius)
worst = 0.0
for _ in range(3000):
    state = step_pose(state, ControlInput(0.0, delta), p)
    r = math.hypot(state.position[0], state.position[1] - radius)
    worst = max(worst, abs(r - radius))
print(f"turning radius {radius:.4f} m; max radial deviation over a lap "
      f"{worst * 1000:.2f} mm (explicit Euler at {p.timestep} s)")
assert worst < 0.05 * radius

# The state carries a unit quaternion consistent with its Euler angles; the
# planar model freezes z, roll, and pitch at their spawn values.
q = state.quaternion
assert abs(sum(c * c for c in q) - 1.0) < 1e-9
assert state.position[2] == 0.0 and state.euler[0] == 0.0
print(f"final pose: x={state.position[0]:+.3f} y={state.position[1]:+.3f} "
      f"yaw={state.yaw:+.3f}")
