"""Scenario settings for the biped environment."""
from __future__ import annotations

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything that shapes an episode.

    Distances are metres, times seconds. ``noise`` is the relative
    amplitude of the multiplicative observation noise; ``terrain`` is
    ``"flat"`` or ``"uneven"`` with per-footfall offsets in
    ``+-terrain_amplitude``.
    """

    terrain: str = "flat"
    terrain_amplitude: float = 0.02
    push: bool = False
    push_force: float = 300.0
    push_period: float = 4.0
    push_duration: float = 0.025
    mass: float = 30.0
    noise: float = 0.0
    episode_cap: float = 10.0
    conquer_radius: float = 0.15
    conquer_time: float = 1.5
    objective_range: float = 2.0
    dt: float = 0.02
    residual_alpha: float = 0.2
    command_alpha: float = 0.5

    def __post_init__(self):
        if self.terrain not in ("flat", "uneven"):
            raise ValueError("terrain must be 'flat' or 'uneven'")
        for name in ("terrain_amplitude", "push_force", "noise", "objective_range", "conquer_radius", "conquer_time"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not self.noise < 1:
            raise ValueError("noise amplitude must be below 1")
        if not self.push_period > self.push_duration > 0:
            raise ValueError("push period must exceed a positive push duration")
        if not (self.mass > 0 and self.dt > 0 and self.episode_cap > 0):
            raise ValueError("mass, dt and episode_cap must be positive")
        if not (0 < self.residual_alpha <= 1 and 0 < self.command_alpha <= 1):
            raise ValueError("filter coefficients must be in (0, 1]")

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


SCENARIOS = {
    "flat": ScenarioConfig(),
    "uneven": ScenarioConfig(terrain="uneven"),
    "push": ScenarioConfig(push=True),
    # the training scenario: uneven ground plus observation noise
    "biped": ScenarioConfig(terrain="uneven", noise=0.1),
}


def get_scenario(name: str, **overrides) -> ScenarioConfig:
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    return replace(SCENARIOS[name], **overrides)
