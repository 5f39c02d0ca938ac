import math

import numpy as np
import pytest

from oampc.geometry import Point2, Segment
from oampc.lidar_sim import (
    LidarParams,
    PoseInObstacleError,
    detect_occlusions,
    downsample,
    scan,
)
from oampc.unicycle import RobotState
from oampc.world import WorldMap, rectangle


def square_room(half=2.0):
    return WorldMap(boundary=rectangle(-half, -half, half, half))


class TestScan:
    def test_square_room_all_hit(self):
        params = LidarParams(num_rays=360, max_range=10.0)
        s = scan(square_room(), RobotState(0, 0, 0), params)
        assert s.hit_mask.all()
        assert s.ranges.min() == pytest.approx(2.0)
        for th, r in zip(s.angles, s.ranges):
            assert r == pytest.approx(2.0 / max(abs(math.cos(th)), abs(math.sin(th))), abs=1e-9)

    def test_empty_world_all_miss(self):
        params = LidarParams(num_rays=64, max_range=5.0)
        s = scan(WorldMap(), RobotState(0, 0, 0), params)
        assert not s.hit_mask.any()
        assert np.all(s.ranges == 5.0)
        # Miss points sit at max range along each ray.
        assert np.allclose(np.hypot(s.points[:, 0], s.points[:, 1]), 5.0)

    def test_interior_obstacle_shortens_rays(self):
        world = WorldMap(
            boundary=rectangle(-4, -4, 4, 4),
            obstacles=[rectangle(1.0, -0.5, 2.0, 0.5)],
        )
        params = LidarParams(num_rays=360, max_range=20.0)
        s = scan(world, RobotState(0, 0, 0), params)
        # Ray straight along +x must hit the obstacle face at x=1.
        i = 0
        assert s.ranges[i] == pytest.approx(1.0)
        # Ray straight along -x sees the room wall at 4.
        j = 180
        assert s.ranges[j] == pytest.approx(4.0)
        # Analytic expected range per ray: min over walls and obstacle faces.
        for i, th in enumerate(s.angles):
            d = np.array([math.cos(th), math.sin(th)])
            expect = _analytic_range(d)
            assert s.ranges[i] == pytest.approx(expect, abs=1e-9), f"ray {i}"

    def test_pose_inside_obstacle_raises(self):
        world = WorldMap(boundary=rectangle(-4, -4, 4, 4), obstacles=[rectangle(1, -1, 2, 1)])
        with pytest.raises(PoseInObstacleError):
            scan(world, RobotState(1.5, 0, 0), LidarParams())

    def test_deterministic(self):
        world = WorldMap(boundary=rectangle(-3, -3, 3, 3), obstacles=[rectangle(0.5, 0.5, 1.5, 1.5)])
        params = LidarParams()
        s1 = scan(world, RobotState(-1, -1, 0.3), params)
        s2 = scan(world, RobotState(-1, -1, 0.3), params)
        assert np.array_equal(s1.ranges, s2.ranges)
        assert np.array_equal(s1.points, s2.points)

    def test_angles_strictly_increasing(self):
        s = scan(square_room(), RobotState(0, 0, 0), LidarParams(num_rays=90))
        assert np.all(np.diff(s.angles) > 0)
        assert s.angles[0] == 0.0
        assert s.angles[-1] < 2 * np.pi


def _analytic_range(d, half=4.0, box=(1.0, -0.5, 2.0, 0.5)):
    best = np.inf
    # Outer walls.
    for axis, sign in ((0, 1), (0, -1), (1, 1), (1, -1)):
        if d[axis] * sign > 1e-12:
            t = half / (d[axis] * sign)
            other = d[1 - axis] * t
            if abs(other) <= half + 1e-12:
                best = min(best, t)
    x0, y0, x1, y1 = box
    # Obstacle faces.
    for x in (x0, x1):
        if abs(d[0]) > 1e-12:
            t = x / d[0]
            if t > 0 and y0 - 1e-12 <= d[1] * t <= y1 + 1e-12:
                best = min(best, t)
    for y in (y0, y1):
        if abs(d[1]) > 1e-12:
            t = y / d[1]
            if t > 0 and x0 - 1e-12 <= d[0] * t <= x1 + 1e-12:
                best = min(best, t)
    return best


class TestDetectOcclusions:
    def _scan_from_ranges(self, ranges, max_range=10.0):
        n = len(ranges)
        angles = 2 * np.pi * np.arange(n) / n
        ranges = np.asarray(ranges, dtype=float)
        dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        points = ranges[:, None] * dirs
        hit_mask = ranges < max_range
        from oampc.lidar_sim import Scan

        return Scan(RobotState(0, 0, 0), angles, ranges, hit_mask, points, np.zeros(n, int), max_range)

    def test_single_jump(self):
        s = self._scan_from_ranges([2.0, 2.05, 2.1, 4.8, 4.85, 2.2, 2.1, 2.05])
        # Jumps at (2,3) and (4,5); with threshold 0.5 both register.
        bounds = detect_occlusions(s, LidarParams(jump_threshold=0.5))
        idx = [b.ray_index for b in bounds]
        assert idx == [2, 4]
        b = bounds[0]
        # Near endpoint is the shorter-range hit.
        assert np.hypot(b.seg.a.x, b.seg.a.y) == pytest.approx(2.1)
        assert np.hypot(b.seg.b.x, b.seg.b.y) == pytest.approx(4.8)

    def test_constant_ranges_none(self):
        s = self._scan_from_ranges([3.0] * 12)
        assert detect_occlusions(s, LidarParams(jump_threshold=0.5)) == []

    def test_near_to_strictly_farther(self):
        rng = np.random.default_rng(2)
        s = self._scan_from_ranges(rng.uniform(1.0, 6.0, 36))
        for b in detect_occlusions(s, LidarParams(jump_threshold=0.5)):
            da = math.hypot(b.seg.a.x, b.seg.a.y)
            db = math.hypot(b.seg.b.x, b.seg.b.y)
            assert db > da

    def test_boundary_length_at_least_threshold(self):
        rng = np.random.default_rng(4)
        s = self._scan_from_ranges(rng.uniform(0.5, 8.0, 60))
        params = LidarParams(jump_threshold=0.7)
        for b in detect_occlusions(s, params):
            assert b.seg.length >= params.jump_threshold - 1e-12

    def test_miss_contributes_virtual_far_point(self):
        ranges = [2.0, 2.0, 10.0, 10.0, 2.0, 2.0]  # 10.0 == max_range: misses
        s = self._scan_from_ranges(ranges, max_range=10.0)
        bounds = detect_occlusions(s, LidarParams(jump_threshold=1.0))
        assert len(bounds) == 2
        far = bounds[0].seg.b
        assert math.hypot(far.x, far.y) == pytest.approx(10.0)

    def test_corner_map_boundary_location(self):
        # L-shaped track: the only large jump from the start pose is across
        # the corner opening at (1.5, 2).
        boundary = np.array([[0.5, 0], [1.5, 0], [1.5, 2], [3, 2], [3, 3], [0.5, 3]])
        world = WorldMap(boundary=boundary)
        params = LidarParams(num_rays=360, max_range=6.0, jump_threshold=0.4)
        s = scan(world, RobotState(0.8, 0.3, math.pi / 2), params)
        bounds = detect_occlusions(s, params)
        assert len(bounds) >= 1
        # Each boundary must brush the corner region: the near point sits on
        # the inner wall x=1.5 close to y=2.
        for b in bounds:
            assert b.seg.a.x == pytest.approx(1.5, abs=0.05)
            assert 1.2 < b.seg.a.y <= 2.0 + 1e-9


class TestDownsample:
    def _wall_scan(self, num_hits, spacing):
        # Hits along a straight wall at y=2, x = 0, spacing, 2*spacing, ...
        n = num_hits
        points = np.stack([np.arange(n) * spacing, np.full(n, 2.0)], axis=1)
        ranges = np.hypot(points[:, 0], points[:, 1])
        angles = np.arctan2(points[:, 1], points[:, 0])
        order = np.argsort(angles)
        from oampc.lidar_sim import Scan

        return Scan(
            RobotState(0, 0, 0),
            angles[order],
            ranges[order],
            np.ones(n, bool),
            points[order],
            np.zeros(n, int),
            10.0,
        )

    def test_wall_count_oracle(self):
        # 100 hits spaced 0.2 m apart: wall length 19.8 m. Greedy thinning at
        # >= 0.5 m keeps one point every 0.6 m of wall.
        s = self._wall_scan(100, 0.2)
        params = LidarParams(downsample_spacing=0.5, coverage_radius=0.35)
        circles = downsample(s, params)
        wall_len = 99 * 0.2
        assert wall_len / 0.6 <= len(circles) <= math.ceil(wall_len / 0.5) + 1

    def test_single_hit(self):
        s = self._wall_scan(1, 0.2)
        circles = downsample(s, LidarParams())
        assert len(circles) == 1
        assert circles[0].radius == LidarParams().coverage_radius

    def test_no_hits(self):
        from oampc.lidar_sim import Scan

        n = 16
        angles = 2 * np.pi * np.arange(n) / n
        s = Scan(
            RobotState(0, 0, 0),
            angles,
            np.full(n, 5.0),
            np.zeros(n, bool),
            np.zeros((n, 2)),
            np.full(n, -1),
            5.0,
        )
        assert downsample(s, LidarParams()) == []

    def test_coverage_invariant(self):
        world = WorldMap(
            boundary=rectangle(-4, -4, 4, 4),
            obstacles=[rectangle(0.5, 0.5, 2.5, 1.5), rectangle(-3, -2, -1, -1)],
        )
        params = LidarParams(num_rays=360, max_range=12.0, downsample_spacing=0.3, coverage_radius=0.2)
        s = scan(world, RobotState(-0.5, -0.2, 0.1), params)
        circles = downsample(s, params, world=world)
        centers = np.array([[c.center.x, c.center.y] for c in circles])
        # Every obstacle hit lies within coverage_radius of some center.
        for i in range(s.num_rays):
            if not s.hit_mask[i] or world.is_boundary_segment(int(s.segment_index[i])):
                continue
            p = s.points[i]
            d = np.hypot(centers[:, 0] - p[0], centers[:, 1] - p[1]).min()
            assert d <= params.coverage_radius + 1e-9

    def test_consecutive_spacing(self):
        s = self._wall_scan(200, 0.05)
        params = LidarParams(downsample_spacing=0.4, coverage_radius=0.25)
        circles = downsample(s, params)
        centers = np.array([[c.center.x, c.center.y] for c in circles])
        gaps = np.hypot(*np.diff(centers, axis=0).T)
        assert np.all(gaps >= params.downsample_spacing - 1e-9)

    def test_boundary_hits_excluded_when_world_given(self):
        world = WorldMap(boundary=rectangle(-2, -2, 2, 2))
        params = LidarParams(num_rays=90, max_range=10.0)
        s = scan(world, RobotState(0, 0, 0), params)
        assert downsample(s, params, world=world) == []
        # Without the world the same scan yields circles.
        assert len(downsample(s, params)) > 0


class TestLidarParams:
    def test_invariants(self):
        with pytest.raises(ValueError):
            LidarParams(num_rays=4)
        with pytest.raises(ValueError):
            LidarParams(max_range=0)
        with pytest.raises(ValueError):
            LidarParams(downsample_spacing=0.5, coverage_radius=0.2)
