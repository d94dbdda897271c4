import math

import numpy as np
import pytest

from agvsim.rotations import quat_from_euler
from agvsim.scenegraph import Obstacle, Ray, Scene, ray_cast
from agvsim.sensors import (CameraConfig, LidarConfig, camera_eye,
                            camera_pixel_dirs, camera_render, cast_camera_ray,
                            gps_read, imu_read, lidar_ray_endpoints,
                            lidar_ray_origin, lidar_scan, quat_to_euler,
                            write_depth_csv, write_ppm, write_seg_csv)
from agvsim.vehicle import VehicleParams, VehicleState
from conftest import random_scene

S2 = math.sqrt(2.0) / 2.0


class TestQuatToEuler:
    def test_identity(self):
        assert quat_to_euler((0.0, 0.0, 0.0, 1.0)) == (0.0, 0.0, 0.0)

    def test_pure_yaw(self):
        roll, pitch, yaw = quat_to_euler((0.0, 0.0, S2, S2))
        assert (roll, pitch) == (0.0, 0.0)
        assert yaw == pytest.approx(math.pi / 2, abs=1e-12)

    def test_pure_roll(self):
        roll, pitch, yaw = quat_to_euler((S2, 0.0, 0.0, S2))
        assert roll == pytest.approx(math.pi / 2, abs=1e-12)
        assert (pitch, yaw) == (0.0, 0.0)

    def test_non_unit_rejected(self):
        with pytest.raises(ValueError, match="unit"):
            quat_to_euler((0.1, 0.0, 0.0, 1.0))

    def test_round_trip(self, rng):
        for _ in range(300):
            roll = float(rng.uniform(-math.pi + 1e-6, math.pi))
            pitch = float(rng.uniform(-math.pi / 2 + 0.01, math.pi / 2 - 0.01))
            yaw = float(rng.uniform(-math.pi + 1e-6, math.pi))
            r, p, y = quat_to_euler(quat_from_euler(roll, pitch, yaw))
            assert r == pytest.approx(roll, abs=1e-9)
            assert p == pytest.approx(pitch, abs=1e-9)
            assert y == pytest.approx(yaw, abs=1e-9)


class TestGpsImu:
    def test_gps_identity_pose(self):
        g = gps_read(VehicleState.from_pose(0.0, 0.0, 0.0))
        assert g.position == (0.0, 0.0, 0.0)
        assert g.euler == (0.0, 0.0, 0.0)

    def test_gps_yaw(self):
        g = gps_read(VehicleState.from_pose(1.0, 2.0, math.pi / 2, z=0.1))
        assert g.position == (1.0, 2.0, 0.1)
        assert g.euler[2] == pytest.approx(math.pi / 2, abs=1e-12)

    def test_gps_round_trip_yaw(self, rng):
        for _ in range(100):
            yaw = float(rng.uniform(-math.pi + 1e-9, math.pi))
            g = gps_read(VehicleState.from_pose(0.0, 0.0, yaw))
            assert g.euler[2] == pytest.approx(yaw, abs=1e-12)

    def test_imu_constant_velocity(self):
        a = VehicleState.from_pose(0, 0, 0, lin_vel=(1.0, 0.5, 0.0))
        b = VehicleState.from_pose(1, 0, 0, lin_vel=(1.0, 0.5, 0.0))
        r = imu_read(b, a, 0.1)
        assert r.lin_acc == (0.0, 0.0, 0.0)
        assert r.ang_acc == (0.0, 0.0, 0.0)

    def test_imu_finite_difference(self):
        a = VehicleState.from_pose(0, 0, 0, lin_vel=(1.0, 0.0, 0.0))
        b = VehicleState.from_pose(1, 0, 0, lin_vel=(2.0, 0.0, 0.0))
        assert imu_read(b, a, 0.1).lin_acc[0] == pytest.approx(10.0, abs=1e-12)

    def test_imu_first_step(self):
        b = VehicleState.from_pose(1, 0, 0, lin_vel=(2.0, 0.0, 0.0))
        r = imu_read(b, None, 0.1)
        assert r.lin_acc == (0.0, 0.0, 0.0)
        assert r.lin_vel == (2.0, 0.0, 0.0)


class TestLidarOrigin:
    def test_zero_offset_modes_coincide(self, rng):
        p = VehicleParams(lidar_mount=(0.0, 0.0, 0.15))
        for _ in range(20):
            s = VehicleState.from_pose(*rng.uniform(-5, 5, 2), float(rng.uniform(-3, 3)))
            a = lidar_ray_origin(s, p, "paper_literal")
            b = lidar_ray_origin(s, p, "rigid_transform")
            assert a == b
            assert a[:2] == s.position[:2]

    def test_forward_mount_zero_yaw(self):
        p = VehicleParams(lidar_mount=(0.2, 0.0, 0.1))
        s = VehicleState.from_pose(1.0, 1.0, 0.0)
        for mode in ("paper_literal", "rigid_transform"):
            o = lidar_ray_origin(s, p, mode)
            assert o == pytest.approx((1.2, 1.0, 0.1), abs=1e-15)

    def test_mode_difference_at_quarter_turn(self):
        p = VehicleParams(lidar_mount=(0.2, 0.1, 0.0))
        s = VehicleState.from_pose(0.0, 0.0, math.pi / 2)
        lit = lidar_ray_origin(s, p, "paper_literal")
        rig = lidar_ray_origin(s, p, "rigid_transform")
        assert lit == pytest.approx((0.0, 0.1, 0.0), abs=1e-12)
        assert rig == pytest.approx((-0.1, 0.2, 0.0), abs=1e-12)


class TestLidarEndpoints:
    def test_hand_evaluated_first_bearing(self):
        cfg = LidarConfig(n_rays=2, fov=math.pi / 2, r_max=1.0)
        s = VehicleState.from_pose(0.0, 0.0, math.pi / 4)
        pts = lidar_ray_endpoints(s, cfg, mount_yaw=math.pi / 4)
        assert pts[0, 0] == pytest.approx(math.sin(math.pi / 4), abs=1e-12)
        assert pts[0, 1] == pytest.approx(math.cos(math.pi / 4), abs=1e-12)

    def test_full_circle_single_ray_periodicity(self):
        cfg = LidarConfig(n_rays=1, fov=2 * math.pi, r_max=2.0)
        s = VehicleState.from_pose(0.0, 0.0, 0.3)
        pts = lidar_ray_endpoints(s, cfg, mount_yaw=0.8)
        b = 0.8 - 0.3
        assert pts[0, 0] == pytest.approx(2.0 * math.sin(b), abs=1e-9)
        assert pts[0, 1] == pytest.approx(2.0 * math.cos(b), abs=1e-9)

    def test_endpoints_lie_at_r_max(self, rng):
        cfg = LidarConfig(n_rays=36, fov=math.pi / 2, r_max=10.0)
        s = VehicleState.from_pose(3.0, -2.0, 1.234)
        origin = (3.1, -2.2, 0.15)
        pts = lidar_ray_endpoints(s, cfg, math.pi / 4, origin)
        d = np.hypot(pts[:, 0] - origin[0], pts[:, 1] - origin[1])
        assert np.all(np.abs(d - cfg.r_max) <= 1e-12 * cfg.r_max)
        assert np.all(pts[:, 2] == origin[2])


class TestLidarScan:
    def test_empty_scene_all_r_max(self):
        scene = Scene("empty", (-100, 100, -100, 100), [], [])
        s = VehicleState.from_pose(0.0, 0.0, 0.0)
        scan = lidar_scan(scene, s, VehicleParams(), LidarConfig())
        assert np.all(scan.ranges == 10.0)
        assert scan.r_min == 10.0
        assert all(not h.hit for h in scan.hits)

    def test_single_ray_hits_cylinder_analytically(self):
        scene = Scene("one", (-100, 100, -100, 100), [
            Obstacle(id=1, kind="cylinder", center=(5.0, 0.0), radius=1.0)], [])
        p = VehicleParams(lidar_mount=(0.0, 0.0, 0.0), lidar_mount_yaw=0.0)
        cfg = LidarConfig(n_rays=1, fov=math.pi / 2, r_max=10.0)
        # bearing = fov = pi/2 -> direction (sin, cos) = (1, 0)
        scan = lidar_scan(scene, VehicleState.from_pose(0.0, 0.0, 0.0), p, cfg)
        assert scan.ranges[0] == pytest.approx(4.0, abs=1e-12)
        assert scan.hits[0].obstacle_id == 1

    def test_r_min_is_min_of_ranges(self, rng):
        scene = random_scene(rng)
        p = VehicleParams()
        for _ in range(20):
            s = VehicleState.from_pose(*rng.uniform(-8, 8, 2), float(rng.uniform(-3, 3)))
            scan = lidar_scan(scene, s, p, LidarConfig())
            assert scan.r_min == scan.ranges.min()
            assert scan.ranges.shape == (36,)
            assert np.all(scan.ranges > 0) and np.all(scan.ranges <= 10.0)

    def test_distance_identity_on_hits(self, rng):
        scene = random_scene(rng)
        p = VehicleParams()
        for _ in range(50):
            s = VehicleState.from_pose(*rng.uniform(-10, 10, 2), float(rng.uniform(-3, 3)))
            origin = lidar_ray_origin(s, p, "paper_literal")
            scan = lidar_scan(scene, s, p, LidarConfig())
            for r, h in zip(scan.ranges, scan.hits):
                if h.hit:
                    direct = math.sqrt((h.position[0] - origin[0]) ** 2
                                       + (h.position[1] - origin[1]) ** 2)
                    assert abs(r - direct) <= 1e-12 * max(direct, 1e-12)

    def test_zero_xy_mount_modes_identical_bitwise(self, rng):
        scene = random_scene(rng)
        p = VehicleParams(lidar_mount=(0.0, 0.0, 0.2))
        for _ in range(10):
            s = VehicleState.from_pose(*rng.uniform(-8, 8, 2), float(rng.uniform(-3, 3)))
            a = lidar_scan(scene, s, p, LidarConfig(mode="paper_literal"))
            b = lidar_scan(scene, s, p, LidarConfig(mode="rigid_transform"))
            assert np.array_equal(a.ranges, b.ranges)
            assert a.hits == b.hits

    def test_rigid_mode_rotation_equivariance(self, rng):
        p = VehicleParams(lidar_mount=(0.15, 0.05, 0.1))
        cfg = LidarConfig(mode="rigid_transform")
        for trial in range(10):
            angle = float(rng.uniform(-math.pi, math.pi))
            c, s_ = math.cos(angle), math.sin(angle)
            obstacles = []
            for i in range(8):
                x, y = rng.uniform(-8, 8, 2)
                obstacles.append(Obstacle(id=i + 1, kind="cylinder",
                                          center=(float(x), float(y)),
                                          radius=float(rng.uniform(0.3, 1.0))))
            rotated = [Obstacle(id=o.id, kind=o.kind,
                                center=(c * o.center[0] - s_ * o.center[1],
                                        s_ * o.center[0] + c * o.center[1]),
                                radius=o.radius) for o in obstacles]
            base = Scene("b", (-100, 100, -100, 100), obstacles, [])
            rot = Scene("r", (-100, 100, -100, 100), rotated, [])
            x0, y0, yaw0 = 1.0, -2.0, 0.4
            s0 = VehicleState.from_pose(x0, y0, yaw0)
            s1 = VehicleState.from_pose(c * x0 - s_ * y0, s_ * x0 + c * y0, yaw0 + angle)
            r0 = lidar_scan(base, s0, p, cfg).ranges
            r1 = lidar_scan(rot, s1, p, cfg).ranges
            assert np.allclose(r0, r1, atol=1e-9, rtol=0)


class TestCamera:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            CameraConfig(near=1.0, far=0.5)
        with pytest.raises(ValueError):
            CameraConfig(width=0)

    def test_empty_scene(self):
        scene = Scene("empty", (-100, 100, -100, 100), [], [])
        cfg = CameraConfig(width=16, height=16)
        frame = camera_render(scene, VehicleState.from_pose(0, 0, 0), cfg)
        assert np.all(frame.seg == 0)
        assert np.all(frame.depth == cfg.far)
        assert np.all(frame.rgb == frame.rgb[0, 0])

    def test_wall_across_frustum(self):
        # eye high enough that every frustum ray at x = d is still above the
        # ground plane, so the whole image sees the wall's front face
        d = 4.0
        wall = Obstacle(id=1, kind="wall", center=(d + 0.5, 0.0),
                        half_extents=(0.5, 100.0), height=100.0, color=(1.0, 0.0, 0.0))
        scene = Scene("wall", (-200, 200, -200, 200), [wall], [])
        cfg = CameraConfig(eye_offset=(0.0, 0.0, 2.5), width=33, height=33, far=50.0)
        state = VehicleState.from_pose(0.0, 0.0, 0.0)
        frame = camera_render(scene, state, cfg)
        assert np.all(frame.seg == 1)
        assert np.all(frame.depth >= d) and np.all(frame.depth < cfg.far)
        assert frame.depth[16, 16] == pytest.approx(d, abs=1e-6)
        assert np.all(frame.rgb[0, 0] == (1.0, 0.0, 0.0))

    def test_depth_equals_direct_cast_and_seg_background(self, rng):
        scene = random_scene(rng, n_cyl=4, n_box=3)
        cfg = CameraConfig(width=12, height=12)
        state = VehicleState.from_pose(0.0, 0.0, float(rng.uniform(-3, 3)))
        frame = camera_render(scene, state, cfg)
        eye = camera_eye(state, cfg)
        dirs = camera_pixel_dirs(state, cfg)
        for j in range(cfg.height):
            for i in range(cfg.width):
                depth, oid = cast_camera_ray(scene, eye, dirs[j, i], cfg.near, cfg.far)
                assert frame.depth[j, i] == depth
                assert frame.seg[j, i] == oid
        assert np.array_equal(frame.seg == 0, frame.depth == cfg.far)

    def test_center_row_matches_planar_cast(self):
        # odd height puts one pixel row exactly at the horizon (dz == 0), where
        # the camera distance must agree with the 2D scenegraph cast
        obstacles = [Obstacle(id=1, kind="cylinder", center=(6.0, 1.0), radius=1.0,
                              height=5.0),
                     Obstacle(id=2, kind="box", center=(5.0, -3.0),
                              half_extents=(1.0, 1.0), yaw=0.3, height=5.0)]
        scene = Scene("tall", (-100, 100, -100, 100), obstacles, [])
        cfg = CameraConfig(eye_offset=(0.0, 0.0, 0.4), width=21, height=21, far=40.0)
        state = VehicleState.from_pose(0.0, 0.0, 0.1)
        frame = camera_render(scene, state, cfg)
        eye = camera_eye(state, cfg)
        dirs = camera_pixel_dirs(state, cfg)
        row = cfg.height // 2
        assert np.all(dirs[row, :, 2] == 0.0)
        for i in range(cfg.width):
            dx, dy, _ = dirs[row, i]
            start = (eye[0] + cfg.near * dx, eye[1] + cfg.near * dy)
            end = (eye[0] + cfg.far * dx, eye[1] + cfg.far * dy)
            hit = ray_cast(scene, Ray(start, end))
            if frame.seg[row, i] != 0:
                assert hit.obstacle_id == frame.seg[row, i]
                assert cfg.near + hit.distance == pytest.approx(frame.depth[row, i],
                                                                abs=1e-9)
            else:
                assert hit.obstacle_id == 0

    def test_low_obstacle_visible_only_below_horizon(self):
        short = Obstacle(id=1, kind="cylinder", center=(4.0, 0.0), radius=0.8,
                         height=0.2)
        scene = Scene("short", (-100, 100, -100, 100), [short], [])
        cfg = CameraConfig(eye_offset=(0.0, 0.0, 1.0), width=17, height=17)
        frame = camera_render(scene, VehicleState.from_pose(0, 0, 0), cfg)
        assert np.all(frame.seg[: cfg.height // 2 + 1] == 0)  # above and at horizon
        assert frame.seg.sum() > 0                            # visible below


class TestExporters:
    def test_ppm_layout(self, tmp_path):
        rgb = np.zeros((2, 3, 3))
        rgb[0, 0] = (1.0, 0.0, 0.0)   # top-left red
        path = tmp_path / "img.ppm"
        write_ppm(path, rgb)
        data = path.read_bytes()
        assert data.startswith(b"P6\n3 2\n255\n")
        pixels = data.split(b"255\n", 1)[1]
        assert pixels[:3] == b"\xff\x00\x00"
        assert len(pixels) == 2 * 3 * 3

    def test_csv_round_trip(self, tmp_path):
        depth = np.array([[1.25, 2.5], [3.0, 4.125]])
        seg = np.array([[0, 1], [2, 0]])
        write_depth_csv(tmp_path / "d.csv", depth)
        write_seg_csv(tmp_path / "s.csv", seg)
        loaded = [[float(v) for v in line.split(",")]
                  for line in (tmp_path / "d.csv").read_text().splitlines()]
        assert np.array_equal(np.array(loaded), depth)
        loaded_seg = [[int(v) for v in line.split(",")]
                      for line in (tmp_path / "s.csv").read_text().splitlines()]
        assert np.array_equal(np.array(loaded_seg), seg)
