"""Experiment configuration: strict YAML parsing, defaults and serialization."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import yaml

from . import agent, env as env_mod, sampler, smirl


class ConfigError(ValueError):
    """Configuration file problem; the message names the offending key."""


@dataclass
class EnvSettings:
    baseline: list = field(default_factory=lambda: list(env_mod.DEFAULT_BASELINE))
    grid_schedule: list = field(default_factory=lambda: list(env_mod.DEFAULT_GRID))
    elasticity: float = 1.0
    noise_scale: float = 0.0
    episode_length: int = 30
    p_max: float = 10.0


@dataclass
class SmirlSettings:
    alpha: float = 0.12
    sigma_floor: float = 0.01
    sigma_init: float = 1.0


@dataclass
class PpoSettings:
    learning_rate: float = 0.003
    batch_size: int = 256
    minibatch_size: int = 32
    clip: float = 0.3
    epochs_per_batch: int = 8
    gamma: float = 0.99
    gae_lambda: float = 0.95
    value_coeff: float = 0.5
    entropy_coeff: float = 0.0


@dataclass
class SamplerSettings:
    constrain_l1: str = "off"
    norm_target: float = 10.0
    load_magnitude: float = 1.0


@dataclass
class MetricsSettings:
    window: int = 100
    bin_size: int = 100


@dataclass
class RunSettings:
    max_steps: int = 20000
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    alphas: list = field(default_factory=lambda: [0.0, 0.01, 0.12, 0.25])
    out_dir: str = "runs"
    workers: int = 0  # 0 means use the machine's CPU count


def _want_float(section, key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key}: expected a number, got {value!r}")
    return float(value)


def _want_int(section, key, value):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{section}.{key}: expected an integer, got {value!r}")
    return int(value)


def _want_float_list(section, key, value, length=None):
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{section}.{key}: expected a list, got {value!r}")
    out = [_want_float(section, key, v) for v in value]
    if length is not None and len(out) != length:
        raise ConfigError(f"{section}.{key}: expected {length} entries, got {len(out)}")
    return out


def _want_str(section, key, value):
    if not isinstance(value, str):
        raise ConfigError(f"{section}.{key}: expected a string, got {value!r}")
    return value


@dataclass
class ExperimentConfig:
    env: EnvSettings = field(default_factory=EnvSettings)
    smirl: SmirlSettings = field(default_factory=SmirlSettings)
    ppo: PpoSettings = field(default_factory=PpoSettings)
    sampler: SamplerSettings = field(default_factory=SamplerSettings)
    metrics: MetricsSettings = field(default_factory=MetricsSettings)
    run: RunSettings = field(default_factory=RunSettings)

    def validate(self) -> "ExperimentConfig":
        e = self.env
        if len(e.baseline) != env_mod.HOURS or any(b < 0 for b in e.baseline):
            raise ConfigError("env.baseline: need 10 non-negative values")
        if sum(e.baseline) <= 0:
            raise ConfigError("env.baseline: total must be positive")
        if len(e.grid_schedule) != env_mod.HOURS or any(g <= 0 for g in e.grid_schedule):
            raise ConfigError("env.grid_schedule: need 10 positive values")
        if e.elasticity < 0:
            raise ConfigError("env.elasticity: must be >= 0")
        if e.noise_scale < 0:
            raise ConfigError("env.noise_scale: must be >= 0")
        if e.episode_length < 1:
            raise ConfigError("env.episode_length: must be >= 1")
        if e.p_max <= 0:
            raise ConfigError("env.p_max: must be > 0")
        s = self.smirl
        if s.alpha < 0:
            raise ConfigError("smirl.alpha: must be >= 0")
        if s.sigma_floor <= 0:
            raise ConfigError("smirl.sigma_floor: must be > 0")
        if s.sigma_init <= 0:
            raise ConfigError("smirl.sigma_init: must be > 0")
        p = self.ppo
        if not 0 < p.clip < 1:
            raise ConfigError("ppo.clip: must lie in (0, 1)")
        if not 0 < p.minibatch_size <= p.batch_size:
            raise ConfigError("ppo.minibatch_size: must lie in (0, batch_size]")
        if p.learning_rate <= 0:
            raise ConfigError("ppo.learning_rate: must be > 0")
        if p.epochs_per_batch < 1:
            raise ConfigError("ppo.epochs_per_batch: must be >= 1")
        if not 0 <= p.gamma <= 1:
            raise ConfigError("ppo.gamma: must lie in [0, 1]")
        if not 0 <= p.gae_lambda <= 1:
            raise ConfigError("ppo.gae_lambda: must lie in [0, 1]")
        sa = self.sampler
        if sa.constrain_l1 not in sampler.CONSTRAINT_MODES:
            raise ConfigError(
                f"sampler.constrain_l1: must be one of {sampler.CONSTRAINT_MODES}")
        if sa.norm_target <= 0:
            raise ConfigError("sampler.norm_target: must be > 0")
        if sa.constrain_l1 != "off" and sa.norm_target > e.p_max:
            raise ConfigError("sampler.norm_target: must not exceed env.p_max "
                              "when a constraint mode is active")
        if sa.load_magnitude < 0:
            raise ConfigError("sampler.load_magnitude: must be >= 0")
        m = self.metrics
        if m.window < 1:
            raise ConfigError("metrics.window: must be >= 1")
        if m.bin_size < 1:
            raise ConfigError("metrics.bin: must be >= 1")
        r = self.run
        if r.max_steps < 0:
            raise ConfigError("run.max_steps: must be >= 0")
        if not r.seeds:
            raise ConfigError("run.seeds: must not be empty")
        if len(set(r.seeds)) != len(r.seeds):
            raise ConfigError("run.seeds: must be distinct")
        if not r.alphas:
            raise ConfigError("run.alphas: must not be empty")
        if any(a < 0 for a in r.alphas):
            raise ConfigError("run.alphas: must be >= 0")
        if r.workers < 0:
            raise ConfigError("run.workers: must be >= 0")
        return self

    # Factories for the live objects the run loop needs.

    def make_environment(self, seed: int) -> env_mod.Environment:
        worker = env_mod.WorkerConfig(baseline=self.env.baseline,
                                      elasticity=self.env.elasticity,
                                      noise_scale=self.env.noise_scale)
        return env_mod.Environment(worker, grid=self.env.grid_schedule, rng_seed=seed,
                                   episode_length=self.env.episode_length,
                                   p_max=self.env.p_max)

    def make_smirl_config(self, alpha: float | None = None) -> smirl.SmirlConfig:
        return smirl.SmirlConfig(alpha=self.smirl.alpha if alpha is None else alpha,
                                 sigma_floor=self.smirl.sigma_floor,
                                 sigma_init=self.smirl.sigma_init)

    def make_ppo_config(self) -> agent.PpoConfig:
        p = self.ppo
        return agent.PpoConfig(learning_rate=p.learning_rate, batch_size=p.batch_size,
                               minibatch_size=p.minibatch_size, clip=p.clip,
                               epochs_per_batch=p.epochs_per_batch, gamma=p.gamma,
                               gae_lambda=p.gae_lambda, value_coeff=p.value_coeff,
                               entropy_coeff=p.entropy_coeff,
                               max_steps=self.run.max_steps)

    def to_dict(self) -> dict:
        return {
            "env": {
                "baseline": list(self.env.baseline),
                "grid_schedule": list(self.env.grid_schedule),
                "elasticity": self.env.elasticity,
                "noise_scale": self.env.noise_scale,
                "episode_length": self.env.episode_length,
                "p_max": self.env.p_max,
            },
            "smirl": {
                "alpha": self.smirl.alpha,
                "sigma_floor": self.smirl.sigma_floor,
                "sigma_init": self.smirl.sigma_init,
            },
            "ppo": {
                "learning_rate": self.ppo.learning_rate,
                "batch_size": self.ppo.batch_size,
                "minibatch_size": self.ppo.minibatch_size,
                "clip": self.ppo.clip,
                "epochs_per_batch": self.ppo.epochs_per_batch,
                "gamma": self.ppo.gamma,
                "gae_lambda": self.ppo.gae_lambda,
                "value_coeff": self.ppo.value_coeff,
                "entropy_coeff": self.ppo.entropy_coeff,
            },
            "sampler": {
                "constrain_l1": self.sampler.constrain_l1,
                "norm_target": self.sampler.norm_target,
                "load_magnitude": self.sampler.load_magnitude,
            },
            "metrics": {
                "window": self.metrics.window,
                "bin": self.metrics.bin_size,
            },
            "run": {
                "max_steps": self.run.max_steps,
                "seeds": list(self.run.seeds),
                "alphas": list(self.run.alphas),
                "out_dir": self.run.out_dir,
                "workers": self.run.workers,
            },
        }

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True, default_flow_style=False)

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def _parse_env(data: dict) -> EnvSettings:
    out = EnvSettings()
    for key, val in data.items():
        if key == "baseline":
            out.baseline = _want_float_list("env", key, val, env_mod.HOURS)
        elif key == "grid_schedule":
            out.grid_schedule = _want_float_list("env", key, val, env_mod.HOURS)
        elif key == "elasticity":
            out.elasticity = _want_float("env", key, val)
        elif key == "noise_scale":
            out.noise_scale = _want_float("env", key, val)
        elif key == "episode_length":
            out.episode_length = _want_int("env", key, val)
        elif key == "p_max":
            out.p_max = _want_float("env", key, val)
        else:
            raise ConfigError(f"unknown key env.{key}")
    return out


def _parse_smirl(data: dict) -> SmirlSettings:
    out = SmirlSettings()
    for key, val in data.items():
        if key in ("alpha", "sigma_floor", "sigma_init"):
            setattr(out, key, _want_float("smirl", key, val))
        else:
            raise ConfigError(f"unknown key smirl.{key}")
    return out


def _parse_ppo(data: dict) -> PpoSettings:
    out = PpoSettings()
    int_keys = ("batch_size", "minibatch_size", "epochs_per_batch")
    float_keys = ("learning_rate", "clip", "gamma", "gae_lambda",
                  "value_coeff", "entropy_coeff")
    for key, val in data.items():
        if key in int_keys:
            setattr(out, key, _want_int("ppo", key, val))
        elif key in float_keys:
            setattr(out, key, _want_float("ppo", key, val))
        else:
            raise ConfigError(f"unknown key ppo.{key}")
    return out


def _parse_sampler(data: dict) -> SamplerSettings:
    out = SamplerSettings()
    for key, val in data.items():
        if key == "constrain_l1":
            # YAML 1.1 reads a bare `off` as boolean false; accept it
            out.constrain_l1 = "off" if val is False else _want_str("sampler", key, val)
        elif key in ("norm_target", "load_magnitude"):
            setattr(out, key, _want_float("sampler", key, val))
        else:
            raise ConfigError(f"unknown key sampler.{key}")
    return out


def _parse_metrics(data: dict) -> MetricsSettings:
    out = MetricsSettings()
    for key, val in data.items():
        if key == "window":
            out.window = _want_int("metrics", key, val)
        elif key == "bin":
            out.bin_size = _want_int("metrics", key, val)
        else:
            raise ConfigError(f"unknown key metrics.{key}")
    return out


def _parse_run(data: dict) -> RunSettings:
    out = RunSettings()
    for key, val in data.items():
        if key == "max_steps":
            out.max_steps = _want_int("run", key, val)
        elif key == "seeds":
            if not isinstance(val, (list, tuple)):
                raise ConfigError(f"run.seeds: expected a list, got {val!r}")
            out.seeds = [_want_int("run", "seeds", v) for v in val]
        elif key == "alphas":
            out.alphas = _want_float_list("run", key, val)
        elif key == "out_dir":
            out.out_dir = _want_str("run", key, val)
        elif key == "workers":
            out.workers = _want_int("run", key, val)
        else:
            raise ConfigError(f"unknown key run.{key}")
    return out


_SECTION_PARSERS = {
    "env": _parse_env,
    "smirl": _parse_smirl,
    "ppo": _parse_ppo,
    "sampler": _parse_sampler,
    "metrics": _parse_metrics,
    "run": _parse_run,
}


def from_dict(data: dict | None) -> ExperimentConfig:
    """Build a config from a parsed YAML tree; unknown keys are hard errors."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be a mapping, got {type(data).__name__}")
    cfg = ExperimentConfig()
    for section, body in data.items():
        parser = _SECTION_PARSERS.get(section)
        if parser is None:
            raise ConfigError(f"unknown key {section}")
        if body is None:
            continue
        if not isinstance(body, dict):
            raise ConfigError(f"{section}: expected a mapping, got {body!r}")
        setattr(cfg, section, parser(body))
    return cfg.validate()


def loads(text: str) -> ExperimentConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from None
    return from_dict(data)


def load(path) -> ExperimentConfig:
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    return loads(text)
