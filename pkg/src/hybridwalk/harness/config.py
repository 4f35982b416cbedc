"""Experiment configuration read from YAML; unknown keys are errors."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace

import yaml

from hybridwalk.env.scenario import SCENARIOS, ScenarioConfig, get_scenario
from hybridwalk.losses import SymLossConfig
from hybridwalk.policy import PPOConfig
from hybridwalk.symmetry import MirrorTransform, biped_mirror


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "biped"
    scenario_overrides: dict = field(default_factory=dict)
    ppo: PPOConfig = PPOConfig()
    sym_kind: str = "none"
    sym_weight: float = 0.05
    transforms: tuple = field(default_factory=lambda: (biped_mirror(),))
    batch: int = 512
    workers: int = 4
    total_steps: int = 200_000
    seeds: tuple = (0,)
    hidden: tuple = (64, 64)
    log_std_init: float = -0.5
    checkpoint_every: int = 10
    out: str = "runs/default"

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {sorted(SCENARIOS)}")
        if self.batch < 2 or self.workers < 1:
            raise ConfigError("batch must be >= 2 and workers >= 1")
        if self.total_steps < self.batch * self.workers:
            raise ConfigError("total_steps must be at least batch * workers")
        if len(self.seeds) == 0:
            raise ConfigError("seed list must be nonempty")
        if self.checkpoint_every < 1:
            raise ConfigError("checkpoint_every must be >= 1")
        try:
            self.scenario_config()
            self.sym_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def scenario_config(self) -> ScenarioConfig:
        return get_scenario(self.scenario, **self.scenario_overrides)

    def sym_config(self) -> SymLossConfig:
        return SymLossConfig(self.sym_kind, self.sym_weight, self.ppo.epsilon, self.transforms)

    @property
    def seed(self) -> int:
        return self.seeds[0]

    def with_overrides(self, **kw) -> "ExperimentConfig":
        try:
            return replace(self, **{k: v for k, v in kw.items() if v is not None})
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["ppo"] = asdict(self.ppo)
        d["transforms"] = [t.to_dict() for t in self.transforms]
        d["seeds"] = list(self.seeds)
        d["hidden"] = list(self.hidden)
        d["scenario_overrides"] = dict(self.scenario_overrides)
        return d


def _strict(cls, d, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def config_from_dict(d: dict) -> ExperimentConfig:
    d = dict(d or {})
    _strict(ExperimentConfig, d, "config")
    try:
        if "ppo" in d:
            _strict(PPOConfig, d["ppo"], "ppo")
            d["ppo"] = PPOConfig(**d["ppo"])
        if "transforms" in d:
            d["transforms"] = tuple(MirrorTransform.from_dict(t) for t in d["transforms"])
        if "scenario_overrides" in d:
            _strict(ScenarioConfig, d["scenario_overrides"], "scenario_overrides")
        for key in ("seeds", "hidden"):
            if key in d:
                d[key] = tuple(int(v) for v in d[key])
        return ExperimentConfig(**d)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(data)


def dump_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=False)
