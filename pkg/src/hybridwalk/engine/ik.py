"""Closed-form planar two-link leg inverse kinematics."""
from __future__ import annotations

import math


class UnreachableTarget(ValueError):
    """Raised for targets outside the leg's annulus; carries the clamped solution."""

    def __init__(self, message, nearest):
        super().__init__(message)
        self.nearest = nearest


def leg_fk(hip_pitch: float, knee: float, thigh_len: float, shank_len: float) -> tuple:
    """Foot ``(x, z)`` in the hip frame; ``z`` points up, so a standing foot has ``z < 0``."""
    shank = hip_pitch - knee
    x = thigh_len * math.sin(hip_pitch) + shank_len * math.sin(shank)
    z = -thigh_len * math.cos(hip_pitch) - shank_len * math.cos(shank)
    return x, z


def _solve(x, z, thigh_len, shank_len):
    d2 = x * x + z * z
    cos_inner = (thigh_len**2 + shank_len**2 - d2) / (2 * thigh_len * shank_len)
    inner = math.acos(max(-1.0, min(1.0, cos_inner)))
    knee = math.pi - inner
    # hip pitch: direction to the foot plus the thigh's offset from that line
    alpha = math.atan2(x, -z)
    cos_off = (thigh_len**2 + d2 - shank_len**2) / (2 * thigh_len * math.sqrt(d2)) if d2 > 0 else 1.0
    offset = math.acos(max(-1.0, min(1.0, cos_off)))
    return alpha + offset, knee


def leg_ik(foot_target: tuple, thigh_len: float, shank_len: float) -> tuple:
    """Return ``(hip_pitch, knee)`` reaching ``foot_target = (x, z)``; the knee bends forward."""
    x, z = foot_target
    dist = math.hypot(x, z)
    lo, hi = abs(thigh_len - shank_len), thigh_len + shank_len
    if dist > hi or dist < lo:
        r = min(max(dist, lo), hi)
        if dist > 0:
            cx, cz = x * r / dist, z * r / dist
        else:
            cx, cz = 0.0, -r
        raise UnreachableTarget(
            f"target at distance {dist:.6g} outside [{lo:.6g}, {hi:.6g}]",
            _solve(cx, cz, thigh_len, shank_len),
        )
    return _solve(x, z, thigh_len, shank_len)
