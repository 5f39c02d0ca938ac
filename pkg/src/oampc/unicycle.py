"""Unicycle kinematics: state/input types and the Euler-discretized step."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def wrap_angle(psi: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.remainder(psi, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


@dataclass(frozen=True)
class RobotState:
    """Pose (x, y, psi). psi is kept continuous internally and wrapped only
    at reporting boundaries to avoid 2*pi jumps inside the planner."""

    x: float
    y: float
    psi: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.psi)):
            raise ValueError("non-finite robot state")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.psi], dtype=float)

    def position(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    def wrapped(self) -> "RobotState":
        return RobotState(self.x, self.y, wrap_angle(self.psi))


@dataclass(frozen=True)
class ControlInput:
    """Command (v, delta): forward speed and heading rate."""

    v: float
    delta: float

    def __post_init__(self):
        if not (math.isfinite(self.v) and math.isfinite(self.delta)):
            raise ValueError("non-finite control input")

    def as_array(self) -> np.ndarray:
        return np.array([self.v, self.delta], dtype=float)


def dynamics_step(z: RobotState, u: ControlInput, dt: float) -> RobotState:
    """One Euler step of the unicycle:
    x' = x + dt v cos(psi), y' = y + dt v sin(psi), psi' = psi + dt delta.
    """
    return RobotState(
        z.x + dt * u.v * math.cos(z.psi),
        z.y + dt * u.v * math.sin(z.psi),
        z.psi + dt * u.delta,
    )


def rollout(z0: np.ndarray, inputs: np.ndarray, dt: float) -> np.ndarray:
    """Roll a (N, 2) input sequence out from z0, returning (N+1, 3) states."""
    n = inputs.shape[0]
    states = np.empty((n + 1, 3), dtype=float)
    states[0] = z0
    for k in range(n):
        x, y, psi = states[k]
        v, delta = inputs[k]
        states[k + 1, 0] = x + dt * v * math.cos(psi)
        states[k + 1, 1] = y + dt * v * math.sin(psi)
        states[k + 1, 2] = psi + dt * delta
    return states
