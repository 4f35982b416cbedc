"""PD torso stabilizer distributing corrections over torso, ankle, hip and arm targets."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TorsoState:
    """Roll/pitch orientation (rad) and rates (rad/s)."""

    roll: float = 0.0
    pitch: float = 0.0
    roll_rate: float = 0.0
    pitch_rate: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite([self.roll, self.pitch, self.roll_rate, self.pitch_rate])):
            raise ValueError("torso state must be finite")

    @property
    def angles(self) -> np.ndarray:
        return np.array([self.roll, self.pitch])

    @property
    def rates(self) -> np.ndarray:
        return np.array([self.roll_rate, self.pitch_rate])


@dataclass(frozen=True)
class StabilizerGains:
    k_phi: tuple = (2.0, 2.0)
    k_phidot: tuple = (0.15, 0.15)
    ankle_share: float = 0.5
    hip_share: float = 0.3
    torso_share: float = 0.2
    arm_gain: float = 0.5

    def __post_init__(self):
        gains = list(self.k_phi) + list(self.k_phidot)
        gains += [self.ankle_share, self.hip_share, self.torso_share, self.arm_gain]
        if min(gains) < 0:
            raise ValueError("stabilizer gains must be non-negative")


@dataclass(frozen=True)
class Correction:
    """Additive joint-target offsets (rad); each array is ``(roll, pitch)``."""

    total: np.ndarray
    torso: np.ndarray
    ankle: np.ndarray
    hip: np.ndarray
    arm: float


def stabilizer_correction(torso: TorsoState, desired: TorsoState, gains: StabilizerGains) -> Correction:
    """``-K_phi (phi - phi_d) - K_phidot (phidot - phidot_d)``, split across targets."""
    err = torso.angles - desired.angles
    err_rate = torso.rates - desired.rates
    total = -np.asarray(gains.k_phi) * err - np.asarray(gains.k_phidot) * err_rate
    return Correction(
        total=total,
        torso=gains.torso_share * total,
        ankle=gains.ankle_share * total,
        hip=gains.hip_share * total,
        # arms swing against the pitch error
        arm=gains.arm_gain * float(total[1]),
    )
