"""Planar world geometry: scene documents, primitives, and segment ray casting.

A scene is a bounded 2D world populated by cylinders, oriented boxes, and
axis-aligned walls. Four boundary walls are always synthesized just outside
the declared bounds so the free interior is exactly the bounds box. All
sensors are built on the single ray-cast primitive defined here: the nearest
intersection of a segment with any obstacle boundary, ties broken by lowest
obstacle id. A uniform-grid index accelerates casts without changing results.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

KINDS = ("cylinder", "box", "wall")

WALL_THICKNESS = 0.1  # boundary wall thickness, meters
WALL_HEIGHT = 2.0
WALL_COLOR = (0.45, 0.45, 0.5)


class SceneParseError(ValueError):
    """Malformed scene document (bad JSON or wrong structure)."""


class SceneValidationError(ValueError):
    """Structurally valid document violating a scene invariant."""


@dataclass(frozen=True)
class Obstacle:
    id: int
    kind: str
    center: tuple[float, float]
    radius: float = 0.0            # cylinder only
    half_extents: tuple[float, float] = (0.0, 0.0)  # box/wall only
    yaw: float = 0.0               # box only
    height: float = 1.0
    tag: str = ""
    color: tuple[float, float, float] = (0.5, 0.5, 0.5)

    def aabb(self) -> tuple[float, float, float, float]:
        """Axis-aligned bounding box (xlo, xhi, ylo, yhi)."""
        cx, cy = self.center
        if self.kind == "cylinder":
            r = self.radius
            return cx - r, cx + r, cy - r, cy + r
        sx, sy = self.half_extents
        c, s = abs(math.cos(self.yaw)), abs(math.sin(self.yaw))
        ex = sx * c + sy * s
        ey = sx * s + sy * c
        return cx - ex, cx + ex, cy - ey, cy + ey


@dataclass(frozen=True)
class Ray:
    origin: tuple[float, float]
    endpoint: tuple[float, float]

    def __post_init__(self):
        if self.origin == self.endpoint:
            raise ValueError("ray origin and endpoint coincide")


@dataclass(frozen=True)
class HitPoint:
    """Cast result; obstacle_id 0 means miss (position is then the endpoint)."""

    position: tuple[float, float]
    obstacle_id: int
    distance: float

    @property
    def hit(self) -> bool:
        return self.obstacle_id != 0


def _validate_obstacles(obstacles, where="scene"):
    seen = set()
    for i, ob in enumerate(obstacles):
        loc = f"{where}.obstacles[{i}]"
        if ob.kind not in KINDS:
            raise SceneValidationError(f"{loc}: unknown kind {ob.kind!r}")
        if ob.id < 1:
            raise SceneValidationError(f"{loc}: id must be >= 1, got {ob.id}")
        if ob.id in seen:
            raise SceneValidationError(f"{loc}: duplicate id {ob.id}")
        seen.add(ob.id)
        if ob.kind == "cylinder":
            if not ob.radius > 0:
                raise SceneValidationError(f"{loc}: radius must be > 0")
        else:
            if not (ob.half_extents[0] > 0 and ob.half_extents[1] > 0):
                raise SceneValidationError(f"{loc}: half_extents must be > 0")
        if ob.kind != "box" and ob.yaw != 0.0:
            raise SceneValidationError(f"{loc}: yaw is only valid for boxes")
        if not ob.height > 0:
            raise SceneValidationError(f"{loc}: height must be > 0")
        if not all(0.0 <= c <= 1.0 for c in ob.color):
            raise SceneValidationError(f"{loc}: color components must be in [0,1]")


def _boundary_walls(bounds, first_id):
    xmin, xmax, ymin, ymax = bounds
    h = WALL_THICKNESS / 2.0
    cx, cy = (xmin + xmax) / 2.0, (ymin + ymax) / 2.0
    hx = (xmax - xmin) / 2.0 + WALL_THICKNESS
    hy = (ymax - ymin) / 2.0 + WALL_THICKNESS
    # Inner wall faces lie exactly on the bounds lines; order W, E, S, N.
    specs = [
        ((xmin - h, cy), (h, hy)),
        ((xmax + h, cy), (h, hy)),
        ((cx, ymin - h), (hx, h)),
        ((cx, ymax + h), (hx, h)),
    ]
    return [
        Obstacle(id=first_id + k, kind="wall", center=c, half_extents=e,
                 height=WALL_HEIGHT, tag="wall", color=WALL_COLOR)
        for k, (c, e) in enumerate(specs)
    ]


class Scene:
    """Immutable validated world; construct via :meth:`assemble` or :func:`parse_scene`."""

    def __init__(self, name, bounds, obstacles, boundary_ids):
        self.name = name
        self.bounds = tuple(float(v) for v in bounds)
        self.obstacles = tuple(obstacles)
        self.boundary_ids = tuple(boundary_ids)
        self._by_id = {ob.id: ob for ob in self.obstacles}
        self._pack()

    @classmethod
    def assemble(cls, name, bounds, obstacles):
        """Validate user obstacles and append the four boundary walls."""
        xmin, xmax, ymin, ymax = (float(v) for v in bounds)
        if not (xmin < xmax and ymin < ymax):
            raise SceneValidationError(
                f"bounds inverted: need xmin < xmax and ymin < ymax, got {bounds}")
        obstacles = list(obstacles)
        _validate_obstacles(obstacles)
        first = max((ob.id for ob in obstacles), default=0) + 1
        walls = _boundary_walls((xmin, xmax, ymin, ymax), first)
        return cls(name, (xmin, xmax, ymin, ymax), obstacles + walls,
                   [w.id for w in walls])

    def obstacle(self, oid) -> Obstacle:
        return self._by_id[oid]

    def _pack(self):
        """Structure-of-arrays in ascending-id order (argmin tie-break = lowest id)."""
        order = sorted(range(len(self.obstacles)), key=lambda i: self.obstacles[i].id)
        self.ids_sorted = np.array([self.obstacles[i].id for i in order], dtype=np.int64)
        circ, box = [], []
        for col, i in enumerate(order):
            (circ if self.obstacles[i].kind == "cylinder" else box).append((col, i))
        self._circ_cols = np.array([c for c, _ in circ], dtype=np.intp)
        self._box_cols = np.array([c for c, _ in box], dtype=np.intp)
        cobs = [self.obstacles[i] for _, i in circ]
        bobs = [self.obstacles[i] for _, i in box]
        self._circ_center = np.array([o.center for o in cobs], dtype=np.float64).reshape(-1, 2)
        self._circ_radius = np.array([o.radius for o in cobs], dtype=np.float64)
        self._box_center = np.array([o.center for o in bobs], dtype=np.float64).reshape(-1, 2)
        self._box_half = np.array([o.half_extents for o in bobs], dtype=np.float64).reshape(-1, 2)
        self._box_cos = np.array([math.cos(o.yaw) for o in bobs], dtype=np.float64)
        self._box_sin = np.array([math.sin(o.yaw) for o in bobs], dtype=np.float64)
        ordered = [self.obstacles[i] for i in order]
        self._aabbs = np.array([ob.aabb() for ob in ordered], dtype=np.float64).reshape(-1, 4)
        self.heights_sorted = np.array([ob.height for ob in ordered], dtype=np.float64)
        self.colors_sorted = np.array([ob.color for ob in ordered], dtype=np.float64).reshape(-1, 3)


_ALLOWED_TOP = {"name", "bounds", "obstacles"}
_BOUND_KEYS = {"xmin", "xmax", "ymin", "ymax"}
_COMMON_KEYS = {"id", "kind", "x", "y", "height", "tag", "color"}
_KIND_KEYS = {"cylinder": {"radius"}, "box": {"sx", "sy", "yaw"}, "wall": {"sx", "sy"}}


def _num(obj, key, loc):
    v = obj.get(key)
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
        raise SceneParseError(f"{loc}: field {key!r} must be a finite number")
    return float(v)


def parse_scene(text: str) -> Scene:
    """Parse a UTF-8 JSON scene document and return the validated Scene.

    Raises SceneParseError with a line/field location for malformed documents
    and SceneValidationError for invariant violations (duplicate ids,
    non-positive dimensions, inverted bounds).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SceneParseError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise SceneParseError("top level: expected a JSON object")
    unknown = set(doc) - _ALLOWED_TOP
    if unknown:
        raise SceneParseError(f"top level: unknown keys {sorted(unknown)}")
    for key in _ALLOWED_TOP:
        if key not in doc:
            raise SceneParseError(f"top level: missing key {key!r}")
    if not isinstance(doc["name"], str):
        raise SceneParseError("field 'name': expected a string")
    b = doc["bounds"]
    if not isinstance(b, dict) or set(b) != _BOUND_KEYS:
        raise SceneParseError(f"field 'bounds': expected keys {sorted(_BOUND_KEYS)}")
    bounds = tuple(_num(b, k, "bounds") for k in ("xmin", "xmax", "ymin", "ymax"))
    if not isinstance(doc["obstacles"], list):
        raise SceneParseError("field 'obstacles': expected an array")

    obstacles = []
    for i, ob in enumerate(doc["obstacles"]):
        loc = f"obstacles[{i}]"
        if not isinstance(ob, dict):
            raise SceneParseError(f"{loc}: expected an object")
        kind = ob.get("kind")
        if kind not in KINDS:
            raise SceneParseError(f"{loc}: field 'kind' must be one of {KINDS}")
        allowed = _COMMON_KEYS | _KIND_KEYS[kind]
        unknown = set(ob) - allowed
        if unknown:
            raise SceneParseError(f"{loc}: unknown keys {sorted(unknown)}")
        oid = ob.get("id")
        if not isinstance(oid, int) or isinstance(oid, bool):
            raise SceneParseError(f"{loc}: field 'id' must be an integer")
        tag = ob.get("tag", "")
        if not isinstance(tag, str):
            raise SceneParseError(f"{loc}: field 'tag' must be a string")
        color = ob.get("color", [0.5, 0.5, 0.5])
        if not (isinstance(color, list) and len(color) == 3
                and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in color)):
            raise SceneParseError(f"{loc}: field 'color' must be [r, g, b]")
        kwargs = dict(
            id=oid, kind=kind, center=(_num(ob, "x", loc), _num(ob, "y", loc)),
            height=_num(ob, "height", loc) if "height" in ob else 1.0,
            tag=tag, color=tuple(float(c) for c in color),
        )
        if kind == "cylinder":
            kwargs["radius"] = _num(ob, "radius", loc)
        else:
            kwargs["half_extents"] = (_num(ob, "sx", loc), _num(ob, "sy", loc))
            if kind == "box":
                kwargs["yaw"] = _num(ob, "yaw", loc) if "yaw" in ob else 0.0
        obstacles.append(Obstacle(**kwargs))

    return Scene.assemble(doc["name"], bounds, obstacles)


def scene_to_json(scene: Scene) -> str:
    """Serialize a scene back to document form (boundary walls are not written)."""
    boundary = set(scene.boundary_ids)
    obs = []
    for ob in scene.obstacles:
        if ob.id in boundary:
            continue
        entry = {"id": ob.id, "kind": ob.kind, "x": ob.center[0], "y": ob.center[1]}
        if ob.kind == "cylinder":
            entry["radius"] = ob.radius
        else:
            entry["sx"], entry["sy"] = ob.half_extents
            if ob.kind == "box":
                entry["yaw"] = ob.yaw
        entry.update(height=ob.height, tag=ob.tag, color=list(ob.color))
        obs.append(entry)
    xmin, xmax, ymin, ymax = scene.bounds
    doc = {"name": scene.name,
           "bounds": {"xmin": xmin, "xmax": xmax, "ymin": ymin, "ymax": ymax},
           "obstacles": obs}
    return json.dumps(doc, indent=2)


# --- segment casting ----------------------------------------------------

_INF = np.inf


def _cast_circles(origins, deltas, centers, radii):
    """Segment parameter of the first boundary crossing per (ray, circle); inf = none."""
    if centers.shape[0] == 0:
        return np.full((origins.shape[0], 0), _INF)
    oc = origins[:, None, :] - centers[None, :, :]
    a = np.sum(deltas * deltas, axis=1)[:, None]
    b = 2.0 * np.sum(oc * deltas[:, None, :], axis=2)
    c = np.sum(oc * oc, axis=2) - radii[None, :] ** 2
    disc = b * b - 4.0 * a * c
    real = disc >= 0.0  # tangent (disc == 0) counts as a hit
    sq = np.sqrt(np.where(real, disc, 0.0))
    t1 = (-b - sq) / (2.0 * a)
    t2 = (-b + sq) / (2.0 * a)
    entry = real & (t1 >= 0.0) & (t1 <= 1.0)
    exit_ = real & (t1 < 0.0) & (t2 >= 0.0) & (t2 <= 1.0)
    return np.where(entry, t1, np.where(exit_, t2, _INF))


def _slab(o, d, s):
    """Per-axis slab interval [lo, hi] for |x| <= s along a local axis."""
    parallel = d == 0.0
    safe = np.where(parallel, 1.0, d)
    ta = (-s - o) / safe
    tb = (s - o) / safe
    lo = np.minimum(ta, tb)
    hi = np.maximum(ta, tb)
    inside = np.abs(o) <= s
    lo = np.where(parallel, np.where(inside, -_INF, _INF), lo)
    hi = np.where(parallel, np.where(inside, _INF, -_INF), hi)
    return lo, hi


def _cast_boxes(origins, deltas, centers, halves, cosy, siny):
    """Segment parameter of the first boundary crossing per (ray, box); inf = none."""
    if centers.shape[0] == 0:
        return np.full((origins.shape[0], 0), _INF)
    rel = origins[:, None, :] - centers[None, :, :]
    axx, axy = cosy[None, :], siny[None, :]          # local x axis
    ayx, ayy = -siny[None, :], cosy[None, :]         # local y axis
    ox = rel[:, :, 0] * axx + rel[:, :, 1] * axy
    oy = rel[:, :, 0] * ayx + rel[:, :, 1] * ayy
    dx = deltas[:, 0:1] * axx + deltas[:, 1:2] * axy
    dy = deltas[:, 0:1] * ayx + deltas[:, 1:2] * ayy
    lox, hix = _slab(ox, dx, halves[None, :, 0])
    loy, hiy = _slab(oy, dy, halves[None, :, 1])
    t_near = np.maximum(lox, loy)
    t_far = np.minimum(hix, hiy)
    overlap = t_near <= t_far
    entry = overlap & (t_near >= 0.0) & (t_near <= 1.0)
    exit_ = overlap & (t_near < 0.0) & (t_far >= 0.0) & (t_far <= 1.0)
    return np.where(entry, t_near, np.where(exit_, t_far, _INF))


def _cast_kernel(scene, origins, deltas, subset=None):
    """Nearest boundary crossing per ray over the scene (or an id-ascending subset).

    Returns (t, obstacle_id) arrays; t = inf and id = 0 for misses. The subset
    path evaluates identical per-obstacle arithmetic, so results are bitwise
    equal to the full scan whenever the true winner is in the subset.
    """
    n = origins.shape[0]
    m = scene.ids_sorted.shape[0]
    if subset is None:
        circ_cols, box_cols = scene._circ_cols, scene._box_cols
        c_center, c_radius = scene._circ_center, scene._circ_radius
        b_center, b_half = scene._box_center, scene._box_half
        b_cos, b_sin = scene._box_cos, scene._box_sin
        ids = scene.ids_sorted
        width = m
        col_of = None
    else:
        mask = np.zeros(m, dtype=bool)
        mask[subset] = True
        keep = np.flatnonzero(mask)          # ascending column order preserved
        col_of = np.full(m, -1, dtype=np.intp)
        col_of[keep] = np.arange(keep.shape[0])
        cmask = mask[scene._circ_cols]
        bmask = mask[scene._box_cols]
        circ_cols = col_of[scene._circ_cols[cmask]]
        box_cols = col_of[scene._box_cols[bmask]]
        c_center, c_radius = scene._circ_center[cmask], scene._circ_radius[cmask]
        b_center, b_half = scene._box_center[bmask], scene._box_half[bmask]
        b_cos, b_sin = scene._box_cos[bmask], scene._box_sin[bmask]
        ids = scene.ids_sorted[keep]
        width = keep.shape[0]

    t = np.full((n, width), _INF)
    if c_center.shape[0]:
        t[:, circ_cols] = _cast_circles(origins, deltas, c_center, c_radius)
    if b_center.shape[0]:
        t[:, box_cols] = _cast_boxes(origins, deltas, b_center, b_half, b_cos, b_sin)
    if width == 0:
        return np.full(n, _INF), np.zeros(n, dtype=np.int64)
    j = np.argmin(t, axis=1)                 # first minimum = lowest id
    t_best = t[np.arange(n), j]
    hit = np.isfinite(t_best)
    return t_best, np.where(hit, ids[j], 0)


def _finish_cast(origins, deltas, t, ids):
    """Positions/distances from kernel output; the single shared arithmetic path."""
    tt = np.where(np.isfinite(t), t, 1.0)[:, None]
    pos = origins + tt * deltas
    dist = np.sqrt((pos[:, 0] - origins[:, 0]) ** 2 + (pos[:, 1] - origins[:, 1]) ** 2)
    return pos, dist


def cast_segments(scene: Scene, origins, endpoints):
    """Cast many segments at once; returns (t, ids, positions, distances).

    Misses report t = inf, id = 0, position = endpoint and distance equal to
    the segment length.
    """
    origins = np.asarray(origins, dtype=np.float64).reshape(-1, 2)
    endpoints = np.asarray(endpoints, dtype=np.float64).reshape(-1, 2)
    deltas = endpoints - origins
    t, ids = _cast_kernel(scene, origins, deltas)
    pos, dist = _finish_cast(origins, deltas, t, ids)
    return t, ids, pos, dist


def ray_cast(scene: Scene, ray: Ray) -> HitPoint:
    """Nearest segment/boundary intersection; equal distances go to the lowest id."""
    t, ids, pos, dist = cast_segments(scene, [ray.origin], [ray.endpoint])
    return HitPoint(position=(float(pos[0, 0]), float(pos[0, 1])),
                    obstacle_id=int(ids[0]), distance=float(dist[0]))


# --- uniform grid index --------------------------------------------------

_GRID_EPS = 1e-9


class SpatialIndex:
    """Uniform grid over obstacle AABBs; casts through it match brute force bitwise."""

    def __init__(self, scene: Scene, max_cells_per_axis: int = 32, min_cell: float = 0.5):
        self.scene = scene
        aabbs = scene._aabbs
        if aabbs.shape[0]:
            x0 = min(aabbs[:, 0].min(), scene.bounds[0]) - _GRID_EPS
            x1 = max(aabbs[:, 1].max(), scene.bounds[1]) + _GRID_EPS
            y0 = min(aabbs[:, 2].min(), scene.bounds[2]) - _GRID_EPS
            y1 = max(aabbs[:, 3].max(), scene.bounds[3]) + _GRID_EPS
        else:
            x0, x1, y0, y1 = scene.bounds
        cell = max(min_cell, max(x1 - x0, y1 - y0) / max_cells_per_axis)
        self.x0, self.y0 = x0, y0
        self.nx = max(1, math.ceil((x1 - x0) / cell))
        self.ny = max(1, math.ceil((y1 - y0) / cell))
        self.csx = (x1 - x0) / self.nx if x1 > x0 else 1.0
        self.csy = (y1 - y0) / self.ny if y1 > y0 else 1.0
        self.cells = [[] for _ in range(self.nx * self.ny)]
        for col in range(aabbs.shape[0]):
            lo_x, hi_x, lo_y, hi_y = aabbs[col]
            ix0 = self._ix(lo_x - _GRID_EPS)
            ix1 = self._ix(hi_x + _GRID_EPS)
            iy0 = self._iy(lo_y - _GRID_EPS)
            iy1 = self._iy(hi_y + _GRID_EPS)
            for ix in range(ix0, ix1 + 1):
                for iy in range(iy0, iy1 + 1):
                    self.cells[ix * self.ny + iy].append(col)
        self.cells = [np.array(c, dtype=np.intp) for c in self.cells]

    def _ix(self, x):
        return min(self.nx - 1, max(0, int(math.floor((x - self.x0) / self.csx))))

    def _iy(self, y):
        return min(self.ny - 1, max(0, int(math.floor((y - self.y0) / self.csy))))

    def _candidates(self, origin, endpoint):
        """Columns of every obstacle whose cell the segment could touch.

        Column-clipping supercover: for each grid column spanned by the
        segment's x-range, the exact y-interval of the segment inside that
        column (inflated by an epsilon) selects the rows. Conservative, so no
        true hit is ever pruned.
        """
        ox, oy = origin
        ex, ey = endpoint
        dx, dy = ex - ox, ey - oy
        ix0, ix1 = sorted((self._ix(min(ox, ex)), self._ix(max(ox, ex))))
        out = []
        for ix in range(ix0, ix1 + 1):
            cx_lo = self.x0 + ix * self.csx
            cx_hi = cx_lo + self.csx
            if abs(dx) < 1e-300:
                t_lo, t_hi = 0.0, 1.0
            else:
                ta = (cx_lo - ox) / dx
                tb = (cx_hi - ox) / dx
                t_lo = max(0.0, min(ta, tb) - 1e-12)
                t_hi = min(1.0, max(ta, tb) + 1e-12)
                if t_lo > t_hi:
                    continue
            ya = oy + t_lo * dy
            yb = oy + t_hi * dy
            iy0 = self._iy(min(ya, yb) - _GRID_EPS)
            iy1 = self._iy(max(ya, yb) + _GRID_EPS)
            for iy in range(iy0, iy1 + 1):
                out.append(self.cells[ix * self.ny + iy])
        if not out:
            return np.empty(0, dtype=np.intp)
        return np.unique(np.concatenate(out))

    def ray_cast(self, ray: Ray) -> HitPoint:
        """Identical contract and results as the module-level :func:`ray_cast`."""
        origins = np.asarray([ray.origin], dtype=np.float64)
        endpoints = np.asarray([ray.endpoint], dtype=np.float64)
        deltas = endpoints - origins
        subset = self._candidates(ray.origin, ray.endpoint)
        t, ids = _cast_kernel(self.scene, origins, deltas, subset=subset)
        pos, dist = _finish_cast(origins, deltas, t, ids)
        return HitPoint(position=(float(pos[0, 0]), float(pos[0, 1])),
                        obstacle_id=int(ids[0]), distance=float(dist[0]))


def build_index(scene: Scene) -> SpatialIndex:
    """Build the uniform-grid acceleration structure for a validated scene."""
    return SpatialIndex(scene)


def point_clearance(scene: Scene, x: float, y: float) -> float:
    """Signed distance from a point to the nearest obstacle boundary (negative inside)."""
    best = _INF
    if scene._circ_center.shape[0]:
        d = np.sqrt((scene._circ_center[:, 0] - x) ** 2
                    + (scene._circ_center[:, 1] - y) ** 2) - scene._circ_radius
        best = min(best, float(d.min()))
    if scene._box_center.shape[0]:
        rx = x - scene._box_center[:, 0]
        ry = y - scene._box_center[:, 1]
        lx = np.abs(rx * scene._box_cos + ry * scene._box_sin) - scene._box_half[:, 0]
        ly = np.abs(-rx * scene._box_sin + ry * scene._box_cos) - scene._box_half[:, 1]
        outside = np.sqrt(np.maximum(lx, 0.0) ** 2 + np.maximum(ly, 0.0) ** 2)
        inside = np.minimum(np.maximum(lx, ly), 0.0)
        d = outside + inside
        best = min(best, float(d.min()))
    return best
