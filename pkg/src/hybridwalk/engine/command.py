"""Stride commands, the command lag filter and footstep planning."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields

import numpy as np


class Side(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def sign(self) -> float:
        return 1.0 if self is Side.LEFT else -1.0

    @property
    def other(self) -> "Side":
        return Side.RIGHT if self is Side.LEFT else Side.LEFT


@dataclass(frozen=True)
class WalkCommand:
    """Stride vector: length, width, swing apex height, rotation, duration."""

    w_x: float = 0.0
    w_y: float = 0.0
    w_z: float = 0.04
    w_theta: float = 0.0
    w_t: float = 0.5

    def __post_init__(self):
        if not self.w_t > 0:
            raise ValueError(f"stride duration must be positive, got {self.w_t}")
        if self.w_z < 0:
            raise ValueError(f"swing height must be non-negative, got {self.w_z}")

    def as_array(self) -> np.ndarray:
        return np.array([self.w_x, self.w_y, self.w_z, self.w_theta, self.w_t])

    @classmethod
    def from_array(cls, arr) -> "WalkCommand":
        return cls(*(float(v) for v in arr))

    def mirrored(self) -> "WalkCommand":
        return WalkCommand(self.w_x, -self.w_y, self.w_z, -self.w_theta, self.w_t)


@dataclass(frozen=True)
class StrideLimits:
    max_x: float = 0.25
    max_y: float = 0.10
    max_theta: float = 0.6
    max_z: float = 0.15
    min_t: float = 0.2
    max_t: float = 2.0

    def check(self, cmd: WalkCommand) -> None:
        problems = []
        if abs(cmd.w_x) > self.max_x:
            problems.append(f"|w_x|={abs(cmd.w_x):.4g} > {self.max_x}")
        if abs(cmd.w_y) > self.max_y:
            problems.append(f"|w_y|={abs(cmd.w_y):.4g} > {self.max_y}")
        if abs(cmd.w_theta) > self.max_theta:
            problems.append(f"|w_theta|={abs(cmd.w_theta):.4g} > {self.max_theta}")
        if cmd.w_z > self.max_z:
            problems.append(f"w_z={cmd.w_z:.4g} > {self.max_z}")
        if not self.min_t <= cmd.w_t <= self.max_t:
            problems.append(f"w_t={cmd.w_t:.4g} outside [{self.min_t}, {self.max_t}]")
        if problems:
            raise ValueError("stride exceeds kinematic limits: " + "; ".join(problems))


def filter_command(raw: WalkCommand, prev: WalkCommand, alpha: float) -> WalkCommand:
    """First-order lag: ``prev + alpha * (raw - prev)`` on every component."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    if alpha == 1.0:
        return raw
    values = {}
    for f in fields(WalkCommand):
        p = getattr(prev, f.name)
        values[f.name] = p + alpha * (getattr(raw, f.name) - p)
    return WalkCommand(**values)


@dataclass(frozen=True)
class Footstep:
    x: float
    y: float
    theta: float
    side: Side


@dataclass(frozen=True)
class FootstepPlan:
    steps: tuple

    def __post_init__(self):
        for a, b in zip(self.steps, self.steps[1:]):
            if a.side == b.side:
                raise ValueError("consecutive footsteps must alternate support side")

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __getitem__(self, i):
        return self.steps[i]

    def positions(self) -> np.ndarray:
        return np.array([[s.x, s.y] for s in self.steps])

    def headings(self) -> np.ndarray:
        return np.array([s.theta for s in self.steps])


def standing_seed(hip_width: float, support: Side = Side.RIGHT) -> FootstepPlan:
    """Both feet side by side at the origin; ``support`` is the last (current) step."""
    other = support.other
    return FootstepPlan(
        (
            Footstep(0.0, other.sign * hip_width / 2, 0.0, other),
            Footstep(0.0, support.sign * hip_width / 2, 0.0, support),
        )
    )


def plan_footsteps(
    cmd: WalkCommand,
    current_feet: FootstepPlan,
    n_steps: int,
    hip_width: float = 0.1,
    limits: StrideLimits | None = None,
) -> FootstepPlan:
    """Place ``n_steps`` footholds after the seed, one per stride.

    The last step of ``current_feet`` is the current support foot. The body
    centre moves by ``(w_x, w_y)`` in the current heading frame each stride,
    the heading accumulates ``w_theta``, and each swing foot lands half a
    hip width off the new centre line.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    (limits or StrideLimits()).check(cmd)
    if len(current_feet) == 0:
        raise ValueError("seed plan must contain the current support foot")

    support = current_feet[-1]
    heading = support.theta
    # centre line sits half a hip width to the inside of the support foot
    off = -support.side.sign * hip_width / 2
    cx = support.x - math.sin(heading) * off
    cy = support.y + math.cos(heading) * off

    steps = []
    side = support.side.other
    for _ in range(n_steps):
        c, s = math.cos(heading), math.sin(heading)
        cx += c * cmd.w_x - s * cmd.w_y
        cy += s * cmd.w_x + c * cmd.w_y
        heading += cmd.w_theta
        c, s = math.cos(heading), math.sin(heading)
        lat = side.sign * hip_width / 2
        steps.append(Footstep(cx - s * lat, cy + c * lat, heading, side))
        side = side.other
    return FootstepPlan(tuple(steps))
