"""Forward reachable sets for hidden and visible agents.

Hidden agents are abstracted by the occlusion boundary they could cross:
their step-k reachable set is the boundary segment inflated by k times the
per-step travel bound (a capsule). Visible agents get concentric disks grown
the same way. Measurement fusion shrinks a tracked agent's set when a fresh
detection arrives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Capsule, Disk, Point2
from .lidar_sim import OcclusionBoundary


class ModelViolationError(RuntimeError):
    """An agent was observed outside its certified reachable set."""


@dataclass(frozen=True)
class AgentModel:
    """Speed bound and physical radius assumed for target agents."""

    v_target: float
    radius: float = 0.0

    def __post_init__(self):
        if self.v_target < 0:
            raise ValueError("v_target must be nonnegative")
        if self.radius < 0:
            raise ValueError("agent radius must be nonnegative")


def step_distance(model: AgentModel, dt: float) -> float:
    """Maximum distance the agent can travel in one time step: v_target * dt."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return model.v_target * dt


@dataclass(frozen=True)
class CapsuleFamily:
    """Nested capsules over one occlusion boundary, indexed k = 1..N.

    capsules[k-1] has radius k * d_step + agent radius on the boundary
    segment, so each capsule contains its predecessor.
    """

    boundary: OcclusionBoundary
    capsules: tuple[Capsule, ...]
    d_step: float

    def set_at(self, k: int) -> Capsule:
        return self.capsules[k - 1]

    @property
    def horizon(self) -> int:
        return len(self.capsules)


@dataclass(frozen=True)
class DiskFamily:
    """Concentric reachable disks for a visible agent, indexed k = 1..N."""

    initial: Disk
    disks: tuple[Disk, ...]
    d_step: float

    def set_at(self, k: int) -> Disk:
        return self.disks[k - 1]

    @property
    def horizon(self) -> int:
        return len(self.disks)


def build_capsules(boundary: OcclusionBoundary, model: AgentModel, dt: float, horizon: int) -> CapsuleFamily:
    """Capsule family over a boundary segment.

    Circles of radius k*d_step + agent radius at both segment endpoints; the
    rectangle is the hull of the four perpendicular tangent points. A
    zero-length boundary degenerates to a disk-equivalent capsule.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    d_step = step_distance(model, dt)
    a, b = boundary.seg.a, boundary.seg.b
    capsules = tuple(
        Capsule.from_segment(a, b, k * d_step + model.radius) for k in range(1, horizon + 1)
    )
    return CapsuleFamily(boundary, capsules, d_step)


def build_disks(detection: Disk, model: AgentModel, dt: float, horizon: int) -> DiskFamily:
    """Concentric disks growing by one step distance per horizon step."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    d_step = step_distance(model, dt)
    disks = tuple(
        Disk(detection.center, detection.radius + k * d_step) for k in range(1, horizon + 1)
    )
    return DiskFamily(detection, disks, d_step)


def fuse_measurement(prev_one_step: Disk, sensed: Disk) -> Disk:
    """Disk covering the intersection of the propagated set and a fresh
    detection, never exceeding the propagated set.

    When the detection already fits inside the propagated set it is returned
    exactly. A proper lens is over-approximated by its smallest enclosing
    disk; if that spills outside the propagated set, the propagated set
    itself is returned (still covers the lens, still no growth).
    """
    cp = prev_one_step.center.as_array()
    cs = sensed.center.as_array()
    rp, rs = prev_one_step.radius, sensed.radius
    d = float(np.hypot(*(cs - cp)))

    if d > rp + rs + 1e-12:
        raise ModelViolationError(
            f"detection at distance {d:.6f} cannot intersect reachable set (r={rp:.6f}+{rs:.6f})"
        )
    if d + rs <= rp + 1e-12:
        return sensed
    if d + rp <= rs + 1e-12:
        return prev_one_step

    # Proper lens: enclosing disk centered on the axis midpoint of the lens
    # span, radius covering both the axial extremes and the crossing points.
    u = (cs - cp) / d
    span_lo = d - rs  # along the axis from cp
    span_hi = rp
    mid = 0.5 * (span_lo + span_hi)
    half_span = 0.5 * (span_hi - span_lo)
    x_cross = (d * d + rp * rp - rs * rs) / (2.0 * d)
    h = math.sqrt(max(0.0, rp * rp - x_cross * x_cross))
    center = cp + mid * u
    radius = max(half_span, math.hypot(mid - x_cross, h))

    if float(np.hypot(*(center - cp))) + radius <= rp + 1e-12:
        return Disk(Point2(float(center[0]), float(center[1])), radius)
    return prev_one_step
