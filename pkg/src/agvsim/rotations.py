"""Quaternion/Euler conversions, intrinsic Z-Y-X (yaw-pitch-roll), quaternions (x, y, z, w)."""

from __future__ import annotations

import math

UNIT_TOL = 1e-6


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]; values already in range pass through unchanged."""
    if -math.pi < a <= math.pi:
        return a
    r = math.remainder(a, math.tau)
    if r <= -math.pi:
        r += math.tau
    return r


def quat_from_euler(roll: float, pitch: float, yaw: float) -> tuple[float, float, float, float]:
    """Unit quaternion (x, y, z, w) for intrinsic Z-Y-X angles."""
    cr, sr = math.cos(roll / 2.0), math.sin(roll / 2.0)
    cp, sp = math.cos(pitch / 2.0), math.sin(pitch / 2.0)
    cy, sy = math.cos(yaw / 2.0), math.sin(yaw / 2.0)
    return (
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
        cr * cp * cy + sr * sp * sy,
    )


def quat_to_euler(q) -> tuple[float, float, float]:
    """(roll, pitch, yaw) with yaw/roll in (-pi, pi] and pitch in [-pi/2, pi/2].

    Raises ValueError when the quaternion norm deviates from 1 by more than 1e-6.
    """
    x, y, z, w = (float(v) for v in q)
    norm = math.sqrt(x * x + y * y + z * z + w * w)
    if abs(norm - 1.0) > UNIT_TOL:
        raise ValueError(f"quaternion is not unit norm: |q| = {norm!r}")
    roll = math.atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y))
    sinp = 2.0 * (w * y - z * x)
    pitch = math.asin(max(-1.0, min(1.0, sinp)))
    yaw = math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))
    return wrap_angle(roll), pitch, wrap_angle(yaw)
