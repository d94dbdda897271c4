"""Sensor suite reading from VehicleState and Scene: GPS, IMU, LiDAR, and a ray-traced camera.

The LiDAR fans n segment rays of length r_max over a field-of-view angle from
a configurable body-frame mount. Two origin conventions are provided:

* ``paper_literal`` (default): the mount offset enters the world position as
  (x_off*cos(yaw) + x, y_off*sin(yaw) + y) and the fan endpoints are generated
  around the world origin, then translated to the ray origin.
* ``rigid_transform``: the mount offset is rotated by the vehicle yaw as a
  standard planar rigid transform.

The two modes coincide for mounts with zero x/y offset. Fan endpoints sit at
the ray origin's height, so every endpoint is exactly r_max from the origin.

The camera is a CPU per-pixel ray caster against the scene primitives extruded
from the ground to their heights; it returns flat-shaded RGB, metric eye-space
depth, and a per-pixel obstacle-id segmentation mask (0 = background).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rotations import quat_to_euler
from .scenegraph import HitPoint, Scene, cast_segments
from .vehicle import VehicleParams, VehicleState

__all__ = [
    "LidarConfig", "LidarScan", "GpsReading", "ImuReading",
    "CameraConfig", "CameraFrame", "quat_to_euler", "gps_read", "imu_read",
    "lidar_ray_origin", "lidar_ray_endpoints", "lidar_scan",
    "camera_eye", "camera_pixel_dirs", "cast_camera_ray", "camera_render",
    "write_ppm", "write_depth_csv", "write_seg_csv",
]

LIDAR_MODES = ("paper_literal", "rigid_transform")

BACKGROUND_COLOR = (0.7, 0.85, 1.0)


@dataclass(frozen=True)
class LidarConfig:
    n_rays: int = 36
    fov: float = math.pi / 2.0      # fan angle, rad
    r_max: float = 10.0             # maximum ray length, m
    mode: str = "paper_literal"

    def __post_init__(self):
        if self.n_rays < 1:
            raise ValueError("n_rays must be >= 1")
        if not 0.0 < self.fov <= 2.0 * math.pi:
            raise ValueError("fov must be in (0, 2*pi]")
        if not self.r_max > 0:
            raise ValueError("r_max must be > 0")
        if self.mode not in LIDAR_MODES:
            raise ValueError(f"mode must be one of {LIDAR_MODES}")


@dataclass(frozen=True)
class LidarScan:
    ranges: np.ndarray              # n distances, misses report r_max
    hits: tuple[HitPoint, ...]      # per ray; obstacle_id 0 = miss
    r_min: float                    # minimum range over the fan

    def __post_init__(self):
        self.ranges.setflags(write=False)


@dataclass(frozen=True)
class GpsReading:
    position: tuple[float, float, float]
    quaternion: tuple[float, float, float, float]
    euler: tuple[float, float, float]


@dataclass(frozen=True)
class ImuReading:
    lin_vel: tuple[float, float, float]
    ang_vel: tuple[float, float, float]
    lin_acc: tuple[float, float, float]
    ang_acc: tuple[float, float, float]


def gps_read(s: VehicleState) -> GpsReading:
    """World position and orientation; Euler angles derived from the quaternion."""
    return GpsReading(position=s.position, quaternion=s.quaternion,
                      euler=quat_to_euler(s.quaternion))


def imu_read(s: VehicleState, prev: VehicleState | None, t_s: float) -> ImuReading:
    """Velocities plus finite-difference accelerations; zeros on the first step."""
    if t_s <= 0:
        raise ValueError("t_s must be > 0")
    if prev is None:
        lin_acc = (0.0, 0.0, 0.0)
        ang_acc = (0.0, 0.0, 0.0)
    else:
        lin_acc = tuple((a - b) / t_s for a, b in zip(s.lin_vel, prev.lin_vel))
        ang_acc = tuple((a - b) / t_s for a, b in zip(s.ang_vel, prev.ang_vel))
    return ImuReading(lin_vel=s.lin_vel, ang_vel=s.ang_vel,
                      lin_acc=lin_acc, ang_acc=ang_acc)


def lidar_ray_origin(s: VehicleState, p: VehicleParams, mode: str = "paper_literal"):
    """World coordinates of the ray origin for the configured mount convention."""
    if mode not in LIDAR_MODES:
        raise ValueError(f"mode must be one of {LIDAR_MODES}")
    x, y, z = s.position
    ox, oy, oz = p.lidar_mount
    yaw = s.yaw
    if mode == "paper_literal":
        return (ox * math.cos(yaw) + x, oy * math.sin(yaw) + y, oz + z)
    c, si = math.cos(yaw), math.sin(yaw)
    return (x + ox * c - oy * si, y + ox * si + oy * c, oz + z)


def lidar_ray_endpoints(s: VehicleState, cfg: LidarConfig, mount_yaw: float,
                        origin=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Fan endpoints, shape (n, 3): bearing_k = (mount_yaw - yaw) + fov*(k/n), k = 1..n.

    Bearings map to directions as (sin, cos); pass origin (0,0,0) to get the
    untranslated endpoints. Endpoint height equals the origin height.
    """
    k = np.arange(1, cfg.n_rays + 1, dtype=np.float64)
    bearings = (mount_yaw - s.yaw) + cfg.fov * (k / cfg.n_rays)
    out = np.empty((cfg.n_rays, 3), dtype=np.float64)
    out[:, 0] = origin[0] + cfg.r_max * np.sin(bearings)
    out[:, 1] = origin[1] + cfg.r_max * np.cos(bearings)
    out[:, 2] = origin[2]
    return out


def lidar_scan(scene: Scene, s: VehicleState, p: VehicleParams, cfg: LidarConfig) -> LidarScan:
    """Cast the fan and report per-ray distances; misses contribute exactly r_max."""
    origin = lidar_ray_origin(s, p, cfg.mode)
    endpoints = lidar_ray_endpoints(s, cfg, p.lidar_mount_yaw, origin)
    origins = np.broadcast_to(np.asarray(origin[:2], dtype=np.float64), (cfg.n_rays, 2))
    t, ids, pos, _ = cast_segments(scene, origins, endpoints[:, :2])
    hit = ids != 0
    # Euclidean hit distance from the ray origin (planar).
    r_o = np.sqrt((pos[:, 0] - origin[0]) ** 2 + (pos[:, 1] - origin[1]) ** 2)
    ranges = np.where(hit, r_o, cfg.r_max)
    hits = tuple(
        HitPoint(position=(float(pos[i, 0]), float(pos[i, 1])),
                 obstacle_id=int(ids[i]),
                 distance=float(r_o[i]) if hit[i] else float(cfg.r_max))
        for i in range(cfg.n_rays)
    )
    return LidarScan(ranges=ranges, hits=hits, r_min=float(ranges.min()))


# --- camera ---------------------------------------------------------------


@dataclass(frozen=True)
class CameraConfig:
    eye_offset: tuple[float, float, float] = (0.12, 0.0, 0.2)  # body frame, m
    fov_y: float = math.pi / 3.0
    aspect: float = 1.0
    near: float = 0.05
    far: float = 50.0
    width: int = 64
    height: int = 64

    def __post_init__(self):
        if not 0.0 < self.near < self.far:
            raise ValueError("need 0 < near < far")
        if self.width < 1 or self.height < 1:
            raise ValueError("resolution must be at least 1x1")
        if not 0.0 < self.fov_y < math.pi:
            raise ValueError("fov_y must be in (0, pi)")
        if self.aspect <= 0:
            raise ValueError("aspect must be > 0")


@dataclass(frozen=True)
class CameraFrame:
    rgb: np.ndarray    # (height, width, 3) in [0, 1]
    depth: np.ndarray  # (height, width) metric eye distances, far on miss
    seg: np.ndarray    # (height, width) obstacle ids, 0 = background


def camera_eye(s: VehicleState, cfg: CameraConfig):
    """Camera position: body-frame eye offset rigidly transformed to world."""
    x, y, z = s.position
    ox, oy, oz = cfg.eye_offset
    c, si = math.cos(s.yaw), math.sin(s.yaw)
    return (x + ox * c - oy * si, y + ox * si + oy * c, z + oz)


def camera_pixel_dirs(s: VehicleState, cfg: CameraConfig) -> np.ndarray:
    """Unit view directions, shape (height, width, 3), row-major with the top row first.

    Look-at basis: forward along the vehicle heading, up = +z; perspective
    from fov_y/aspect with pixel centers sampled at half-pixel offsets.
    """
    c, si = math.cos(s.yaw), math.sin(s.yaw)
    fwd = np.array([c, si, 0.0])
    right = np.array([si, -c, 0.0])
    up = np.array([0.0, 0.0, 1.0])
    th = math.tan(cfg.fov_y / 2.0)
    xs = (2.0 * (np.arange(cfg.width) + 0.5) / cfg.width - 1.0) * th * cfg.aspect
    ys = (1.0 - 2.0 * (np.arange(cfg.height) + 0.5) / cfg.height) * th
    dirs = (fwd[None, None, :]
            + xs[None, :, None] * right[None, None, :]
            + ys[:, None, None] * up[None, None, :])
    return dirs / np.linalg.norm(dirs, axis=2, keepdims=True)


def _cast_solids(scene: Scene, eye, dirs, near: float, far: float):
    """First surface of the height-extruded primitives along each unit ray.

    Returns (t, ids) with t measured from the eye; rays that start inside a
    solid hit its exit surface. t = far and id = 0 encode a miss.
    """
    dirs = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
    n = dirs.shape[0]
    ex, ey, ez = (float(v) for v in eye)
    m = scene.ids_sorted.shape[0]
    lo = np.full((n, m), -np.inf)
    hi = np.full((n, m), np.inf)

    heights = scene.heights_sorted
    # cylinders: radial quadratic interval, then z slab [0, height]
    cc = scene._circ_cols
    if cc.shape[0]:
        cx = scene._circ_center[None, :, 0]
        cy = scene._circ_center[None, :, 1]
        r = scene._circ_radius[None, :]
        dx, dy = dirs[:, 0:1], dirs[:, 1:2]
        ox, oy = ex - cx, ey - cy
        a = dx * dx + dy * dy
        b = 2.0 * (ox * dx + oy * dy)
        cq = ox * ox + oy * oy - r * r
        planar = a == 0.0
        safe_a = np.where(planar, 1.0, a)
        disc = b * b - 4.0 * safe_a * cq
        real = disc >= 0.0
        sq = np.sqrt(np.where(real, disc, 0.0))
        rlo = np.where(planar, np.where(cq <= 0.0, -np.inf, np.inf),
                       np.where(real, (-b - sq) / (2.0 * safe_a), np.inf))
        rhi = np.where(planar, np.where(cq <= 0.0, np.inf, -np.inf),
                       np.where(real, (-b + sq) / (2.0 * safe_a), -np.inf))
        zlo, zhi = _zslab(ez, dirs[:, 2:3], heights[None, cc])
        lo[:, cc] = np.maximum(rlo, zlo)
        hi[:, cc] = np.minimum(rhi, zhi)

    bc = scene._box_cols
    if bc.shape[0]:
        cosv = scene._box_cos[None, :]
        sinv = scene._box_sin[None, :]
        hx = scene._box_half[None, :, 0]
        hy = scene._box_half[None, :, 1]
        rx = ex - scene._box_center[None, :, 0]
        ry = ey - scene._box_center[None, :, 1]
        olx = rx * cosv + ry * sinv
        oly = -rx * sinv + ry * cosv
        dlx = dirs[:, 0:1] * cosv + dirs[:, 1:2] * sinv
        dly = -dirs[:, 0:1] * sinv + dirs[:, 1:2] * cosv
        lx, ux = _axslab(olx, dlx, hx)
        ly, uy = _axslab(oly, dly, hy)
        zlo, zhi = _zslab(ez, dirs[:, 2:3], heights[None, bc])
        lo[:, bc] = np.maximum(np.maximum(lx, ly), zlo)
        hi[:, bc] = np.minimum(np.minimum(ux, uy), zhi)

    entry = np.where((lo <= hi) & (lo >= near) & (lo <= far), lo, np.inf)
    exit_ = np.where((lo <= hi) & (lo < near) & (hi >= near) & (hi <= far), hi, np.inf)
    t = np.minimum(entry, exit_)
    j = np.argmin(t, axis=1) if m else np.zeros(n, dtype=np.intp)
    t_best = t[np.arange(n), j] if m else np.full(n, np.inf)
    hit = np.isfinite(t_best)
    ids = np.where(hit, scene.ids_sorted[j] if m else 0, 0)
    return np.where(hit, t_best, far), ids


def _axslab(o, d, s):
    parallel = d == 0.0
    safe = np.where(parallel, 1.0, d)
    ta = (-s - o) / safe
    tb = (s - o) / safe
    lo = np.where(parallel, np.where(np.abs(o) <= s, -np.inf, np.inf), np.minimum(ta, tb))
    hi = np.where(parallel, np.where(np.abs(o) <= s, np.inf, -np.inf), np.maximum(ta, tb))
    return lo, hi


def _zslab(oz, dz, h):
    parallel = dz == 0.0
    safe = np.where(parallel, 1.0, dz)
    ta = (0.0 - oz) / safe
    tb = (h - oz) / safe
    inside = (oz >= 0.0) & (oz <= h)
    lo = np.where(parallel, np.where(inside, -np.inf, np.inf), np.minimum(ta, tb))
    hi = np.where(parallel, np.where(inside, np.inf, -np.inf), np.maximum(ta, tb))
    return lo, hi


def cast_camera_ray(scene: Scene, eye, direction, near: float, far: float):
    """Single-ray version of the camera cast; returns (depth, obstacle_id)."""
    t, ids = _cast_solids(scene, eye, np.asarray(direction, dtype=np.float64).reshape(1, 3),
                          near, far)
    return float(t[0]), int(ids[0])


def camera_render(scene: Scene, s: VehicleState, cfg: CameraConfig) -> CameraFrame:
    """Render RGB / depth / segmentation by per-pixel ray casting.

    Depth is the Euclidean eye distance of the first surface within
    [near, far]; background pixels carry depth exactly equal to far and
    segmentation id 0.
    """
    eye = camera_eye(s, cfg)
    dirs = camera_pixel_dirs(s, cfg)
    t, ids = _cast_solids(scene, eye, dirs, cfg.near, cfg.far)
    depth = t.reshape(cfg.height, cfg.width)
    seg = ids.reshape(cfg.height, cfg.width)
    rgb = np.empty((cfg.height * cfg.width, 3), dtype=np.float64)
    rgb[:] = BACKGROUND_COLOR
    hit = ids != 0
    if hit.any():
        id_to_col = {oid: k for k, oid in enumerate(scene.ids_sorted.tolist())}
        cols = np.array([id_to_col[oid] for oid in ids[hit].tolist()], dtype=np.intp)
        rgb[hit] = scene.colors_sorted[cols]
    return CameraFrame(rgb=rgb.reshape(cfg.height, cfg.width, 3), depth=depth, seg=seg)


# --- debug exporters ------------------------------------------------------


def write_ppm(path, rgb) -> None:
    """Binary PPM (P6, maxval 255), row-major, top row first."""
    rgb = np.asarray(rgb)
    h, w, _ = rgb.shape
    data = np.clip(np.rint(rgb * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(data.tobytes())


def write_depth_csv(path, depth) -> None:
    depth = np.asarray(depth)
    with open(path, "w", encoding="utf-8") as f:
        for row in depth:
            f.write(",".join(repr(float(v)) for v in row) + "\n")


def write_seg_csv(path, seg) -> None:
    seg = np.asarray(seg)
    with open(path, "w", encoding="utf-8") as f:
        for row in seg:
            f.write(",".join(str(int(v)) for v in row) + "\n")
