"""Simulated 360-degree range sensor and scan post-processing.

Produces per-ray ranges against the polygonal world, detects occlusion
boundaries from range discontinuities between consecutive rays, and thins
obstacle hit points into coverage circles for static avoidance.

Rays are cast at fixed world-frame angles: the sensor is omnidirectional, so
robot heading does not affect the returns, and tests stay frame-independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Point2, Segment, raycast_fan
from .unicycle import RobotState
from .world import WorldMap


class PoseInObstacleError(ValueError):
    """The requested sensor pose is not in free space."""


@dataclass(frozen=True)
class LidarParams:
    num_rays: int = 360
    max_range: float = 8.0
    jump_threshold: float = 0.4  # 2 * default robot radius
    downsample_spacing: float = 0.3
    coverage_radius: float = 0.2

    def __post_init__(self):
        if self.num_rays < 8:
            raise ValueError("num_rays must be at least 8")
        if self.max_range <= 0:
            raise ValueError("max_range must be positive")
        if self.jump_threshold <= 0:
            raise ValueError("jump_threshold must be positive")
        if self.coverage_radius < self.downsample_spacing / 2:
            raise ValueError("coverage_radius must be at least downsample_spacing/2")


@dataclass(frozen=True)
class Scan:
    """One sweep: strictly increasing angles over [0, 2pi), ranges clamped to
    max_range, and per-ray points (true hits, or the max-range point on the
    ray for misses so open space still reads as potentially occupied)."""

    pose: RobotState
    angles: np.ndarray
    ranges: np.ndarray
    hit_mask: np.ndarray
    points: np.ndarray  # (n, 2)
    segment_index: np.ndarray  # (n,) index of the hit segment, -1 for miss
    max_range: float

    @property
    def num_rays(self) -> int:
        return len(self.angles)


@dataclass(frozen=True)
class OcclusionBoundary:
    """Line-of-sight segment from the near hit to the far point of a
    consecutive-ray range jump. Everything beyond it is unobserved."""

    seg: Segment
    ray_index: int


@dataclass(frozen=True)
class PointCloudCircle:
    center: Point2
    radius: float


def scan(world: WorldMap, pose: RobotState, params: LidarParams) -> Scan:
    """Cast num_rays rays from the pose against every world segment."""
    origin = pose.position()
    if not world.contains_free(origin):
        raise PoseInObstacleError(f"sensor pose ({pose.x}, {pose.y}) is inside an obstacle")
    n = params.num_rays
    angles = 2.0 * np.pi * np.arange(n) / n
    seg_a, seg_b = world.segment_arrays()
    if len(seg_a) == 0:
        ranges = np.full(n, params.max_range)
        hit_mask = np.zeros(n, dtype=bool)
        seg_idx = np.full(n, -1, dtype=int)
    else:
        ranges, hit_mask, seg_idx = _fan_with_indices(origin, angles, seg_a, seg_b, params.max_range)
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    points = origin[None, :] + ranges[:, None] * dirs
    return Scan(pose, angles, ranges, hit_mask, points, seg_idx, params.max_range)


def _fan_with_indices(origin, angles, seg_a, seg_b, max_range):
    # Same math as geometry.raycast_fan but keeps the argmin segment index.
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    e = seg_b - seg_a
    ao = seg_a[None, :, :] - origin[None, None, :]
    denom = dirs[:, None, 0] * e[None, :, 1] - dirs[:, None, 1] * e[None, :, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (ao[:, :, 0] * e[None, :, 1] - ao[:, :, 1] * e[None, :, 0]) / denom
        s = (ao[:, :, 0] * dirs[:, None, 1] - ao[:, :, 1] * dirs[:, None, 0]) / denom
    valid = (np.abs(denom) >= 1e-14) & (t >= 0.0) & (s >= -1e-12) & (s <= 1.0 + 1e-12)
    t = np.where(valid, t, np.inf)
    idx = np.argmin(t, axis=1)
    ranges = t[np.arange(len(angles)), idx]
    hit_mask = ranges <= max_range
    seg_idx = np.where(hit_mask, idx, -1)
    ranges = np.where(hit_mask, ranges, max_range)
    return ranges, hit_mask, seg_idx


def detect_occlusions(scan_: Scan, params: LidarParams) -> list[OcclusionBoundary]:
    """Boundaries of unobserved space: every cyclic consecutive ray pair whose
    range difference exceeds jump_threshold yields the segment from the nearer
    hit point to the farther point (a true hit or the max-range point)."""
    n = scan_.num_rays
    out: list[OcclusionBoundary] = []
    ranges = scan_.ranges
    points = scan_.points
    for i in range(n):
        j = (i + 1) % n
        if abs(ranges[j] - ranges[i]) <= params.jump_threshold:
            continue
        near, far = (i, j) if ranges[i] < ranges[j] else (j, i)
        a = points[near]
        b = points[far]
        out.append(
            OcclusionBoundary(
                Segment(Point2(float(a[0]), float(a[1])), Point2(float(b[0]), float(b[1]))),
                ray_index=i,
            )
        )
    return out


def downsample(scan_: Scan, params: LidarParams, world: WorldMap | None = None) -> list[PointCloudCircle]:
    """Thin obstacle hit points into coverage circles.

    Walks hits in ray order keeping a point once it is at least
    downsample_spacing from the last kept one, then adds any hit left farther
    than coverage_radius from every kept center (a backstop that keeps the
    coverage guarantee even on grazing scans). Boundary-track hits are skipped
    when a world is supplied: track limits are enforced as planner state
    bounds, not as point-cloud avoidance.
    """
    keep_mask = scan_.hit_mask.copy()
    if world is not None:
        for i in range(scan_.num_rays):
            if keep_mask[i] and world.is_boundary_segment(int(scan_.segment_index[i])):
                keep_mask[i] = False
    hits = scan_.points[keep_mask]
    if len(hits) == 0:
        return []

    kept: list[np.ndarray] = [hits[0]]
    for p in hits[1:]:
        if np.hypot(*(p - kept[-1])) >= params.downsample_spacing:
            kept.append(p)

    centers = np.array(kept)
    # Coverage backstop: every hit must be within coverage_radius of a center.
    r = params.coverage_radius
    for p in hits:
        d = np.hypot(centers[:, 0] - p[0], centers[:, 1] - p[1])
        if d.min() > r:
            centers = np.vstack([centers, p])

    return [PointCloudCircle(Point2(float(c[0]), float(c[1])), r) for c in centers]
