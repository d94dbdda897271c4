"""Procedural scene presets: seeded outdoor/urban maps and a fixed oval track.

Outdoor presets scatter cylinders ("tree", "boulder") over the map, urban
presets place axis-aligned and rotated boxes ("building", "vehicle"), and the
oval preset builds two concentric stadium-shaped wall loops enclosing a 4 m
driving corridor. A disc around the map center is kept free of obstacles so
episodes always have spawn room. Identical (preset, seed) pairs produce
bitwise-identical scenes.
"""

from __future__ import annotations

import math

import numpy as np

from .scenegraph import Obstacle, Scene

PRESETS = ("outdoor20", "outdoor50", "urban20", "urban50", "oval")

SPAWN_CLEAR_RADIUS = 3.0   # obstacle-free disc at the map center, m

# stadium geometry shared by scene construction and spawn headings
OVAL_STRAIGHT_HALF = 5.0   # straight section half-length, m
OVAL_MID_RADIUS = 5.0      # centerline radius at the ends, m
OVAL_HALF_WIDTH = 2.0      # corridor half-width, m
_ARC_SEGMENTS = 10
_RAIL_HALF_THICK = 0.05


def build_scene(preset: str, seed: int) -> Scene:
    if preset == "outdoor20":
        return _outdoor(preset, seed, half=10.0, trees=14, boulders=6)
    if preset == "outdoor50":
        return _outdoor(preset, seed, half=25.0, trees=45, boulders=18)
    if preset == "urban20":
        return _urban(preset, seed, half=10.0, buildings=5, vehicles=6)
    if preset == "urban50":
        return _urban(preset, seed, half=25.0, buildings=13, vehicles=18)
    if preset == "oval":
        return _oval(preset)
    raise ValueError(f"unknown preset {preset!r}")


def _place_clear(rng, half, margin, keepout):
    """Seeded rejection sample of a center outside the spawn disc."""
    for _ in range(200):
        x = rng.uniform(-half + margin, half - margin)
        y = rng.uniform(-half + margin, half - margin)
        if math.hypot(x, y) > keepout:
            return x, y
    raise RuntimeError("preset placement failed to clear the spawn disc")


def _outdoor(name, seed, half, trees, boulders):
    rng = np.random.default_rng(seed)
    obstacles = []
    oid = 1
    for _ in range(trees):
        r = float(rng.uniform(0.25, 0.6))
        x, y = _place_clear(rng, half, r + 0.3, SPAWN_CLEAR_RADIUS + r)
        g = float(rng.uniform(0.35, 0.55))
        obstacles.append(Obstacle(
            id=oid, kind="cylinder", center=(x, y), radius=r,
            height=float(rng.uniform(1.2, 2.5)), tag="tree", color=(0.16, g, 0.12)))
        oid += 1
    for _ in range(boulders):
        r = float(rng.uniform(0.4, 0.9))
        x, y = _place_clear(rng, half, r + 0.3, SPAWN_CLEAR_RADIUS + r)
        g = float(rng.uniform(0.45, 0.6))
        obstacles.append(Obstacle(
            id=oid, kind="cylinder", center=(x, y), radius=r,
            height=float(rng.uniform(0.3, 0.7)), tag="boulder", color=(g, g, g)))
        oid += 1
    return Scene.assemble(f"{name}-{seed}", (-half, half, -half, half), obstacles)


def _urban(name, seed, half, buildings, vehicles):
    rng = np.random.default_rng(seed)
    obstacles = []
    placed = []  # (x, y, circumradius) for corridor separation between buildings
    oid = 1
    for i in range(buildings):
        for _ in range(200):
            sx = float(rng.uniform(1.2, 2.5))
            sy = float(rng.uniform(1.2, 2.5))
            yaw = 0.0 if i % 2 == 0 else float(rng.uniform(0.0, math.pi / 2.0))
            cr = math.hypot(sx, sy)
            x = float(rng.uniform(-half + cr + 0.3, half - cr - 0.3))
            y = float(rng.uniform(-half + cr + 0.3, half - cr - 0.3))
            if math.hypot(x, y) <= SPAWN_CLEAR_RADIUS + cr:
                continue
            if all(math.hypot(x - px, y - py) > cr + pr + 1.2 for px, py, pr in placed):
                placed.append((x, y, cr))
                shade = float(rng.uniform(0.45, 0.7))
                obstacles.append(Obstacle(
                    id=oid, kind="box", center=(x, y), half_extents=(sx, sy), yaw=yaw,
                    height=float(rng.uniform(2.0, 4.0)), tag="building",
                    color=(shade, shade * 0.95, shade * 0.9)))
                oid += 1
                break
    for _ in range(vehicles):
        x, y = _place_clear(rng, half, 0.8, SPAWN_CLEAR_RADIUS + 0.6)
        yaw = float(rng.uniform(0.0, 2.0 * math.pi))
        obstacles.append(Obstacle(
            id=oid, kind="box", center=(x, y), half_extents=(0.25, 0.11), yaw=yaw,
            height=float(rng.uniform(0.14, 0.2)), tag="vehicle",
            color=(float(rng.uniform(0.2, 0.9)), float(rng.uniform(0.2, 0.9)),
                   float(rng.uniform(0.2, 0.9)))))
        oid += 1
    return Scene.assemble(f"{name}-{seed}", (-half, half, -half, half), obstacles)


def _loop_points(radius):
    """Closed polyline of a stadium loop at the given offset radius, CCW."""
    a = OVAL_STRAIGHT_HALF
    pts = []
    # right semicircle from (a, -radius) up to (a, radius)
    for k in range(_ARC_SEGMENTS + 1):
        th = -math.pi / 2.0 + math.pi * k / _ARC_SEGMENTS
        pts.append((a + radius * math.cos(th), radius * math.sin(th)))
    # left semicircle from (-a, radius) down to (-a, -radius)
    for k in range(_ARC_SEGMENTS + 1):
        th = math.pi / 2.0 + math.pi * k / _ARC_SEGMENTS
        pts.append((-a + radius * math.cos(th), radius * math.sin(th)))
    pts.append(pts[0])
    return pts


def _loop_obstacles(radius, first_id, tag, color, height):
    obstacles = []
    pts = _loop_points(radius)
    oid = first_id
    for (x0, y0), (x1, y1) in zip(pts[:-1], pts[1:]):
        mx, my = (x0 + x1) / 2.0, (y0 + y1) / 2.0
        length = math.hypot(x1 - x0, y1 - y0)
        yaw = math.atan2(y1 - y0, x1 - x0)
        obstacles.append(Obstacle(
            id=oid, kind="box", center=(mx, my),
            half_extents=(length / 2.0 + 0.06, _RAIL_HALF_THICK), yaw=yaw,
            height=height, tag=tag, color=color))
        oid += 1
    return obstacles


def _oval(name):
    outer = OVAL_MID_RADIUS + OVAL_HALF_WIDTH
    inner = OVAL_MID_RADIUS - OVAL_HALF_WIDTH
    obstacles = _loop_obstacles(outer, 1, "rail_outer", (0.85, 0.3, 0.25), 0.8)
    obstacles += _loop_obstacles(inner, len(obstacles) + 1, "rail_inner",
                                 (0.9, 0.85, 0.3), 0.8)
    half_x = OVAL_STRAIGHT_HALF + outer + 1.0
    half_y = outer + 1.0
    return Scene.assemble(name, (-half_x, half_x, -half_y, half_y), obstacles)


def oval_centerline_distance(x: float, y: float) -> float:
    """Distance from a point to the stadium skeleton segment (used by spawn/tests)."""
    cx = min(max(x, -OVAL_STRAIGHT_HALF), OVAL_STRAIGHT_HALF)
    return math.hypot(x - cx, y)


def in_oval_corridor(x: float, y: float) -> bool:
    """True inside the driving corridor between the two loops."""
    return abs(oval_centerline_distance(x, y) - OVAL_MID_RADIUS) < OVAL_HALF_WIDTH


def spawn_yaw(preset: str, x: float, y: float, rng) -> float:
    """Spawn heading: track tangent with jitter on the oval, uniform elsewhere."""
    if preset != "oval":
        return float(rng.uniform(-math.pi, math.pi))
    cx = min(max(x, -OVAL_STRAIGHT_HALF), OVAL_STRAIGHT_HALF)
    phi = math.atan2(y, x - cx)
    ccw = bool(rng.integers(0, 2))
    yaw = phi + math.pi / 2.0 if ccw else phi - math.pi / 2.0
    return yaw + float(rng.uniform(-0.15, 0.15))
