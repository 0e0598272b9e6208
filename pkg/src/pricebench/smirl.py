"""Streaming Gaussian state model and surprise-based reward shaping.

A buffer keeps a running per-hour mean and variance of every demand profile
the agent has observed. States that look like past observations score a high
auxiliary reward; unfamiliar states score low. Mixing this term into the
training reward pushes the policy toward keeping the environment predictable.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_SIGMA_FLOOR = 0.01
DEFAULT_SIGMA_INIT = 1.0


@dataclass
class SmirlConfig:
    """Weight of the surprise term and the variance-model guard rails."""

    alpha: float = 0.12
    sigma_floor: float = DEFAULT_SIGMA_FLOOR
    sigma_init: float = DEFAULT_SIGMA_INIT

    def __post_init__(self):
        self.alpha = float(self.alpha)
        if not np.isfinite(self.alpha) or self.alpha < 0.0:
            raise ValueError("alpha must be finite and >= 0")
        self.sigma_floor = float(self.sigma_floor)
        if self.sigma_floor <= 0.0:
            raise ValueError("sigma_floor must be > 0")
        self.sigma_init = float(self.sigma_init)
        if self.sigma_init <= 0.0:
            raise ValueError("sigma_init must be > 0")


class SmirlBuffer:
    """Welford-style streaming mean/variance per observation dimension.

    `mean` and `m2` (running sum of squared deviations) reproduce the batch
    sample mean and sample variance of everything inserted so far. Until two
    observations have arrived the standard deviation is pinned at
    `sigma_init`; afterwards it never drops below `sigma_floor`.
    """

    def __init__(self, dim: int = 10, sigma_floor: float = DEFAULT_SIGMA_FLOOR,
                 sigma_init: float = DEFAULT_SIGMA_INIT):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if sigma_floor <= 0.0 or sigma_init <= 0.0:
            raise ValueError("sigma_floor and sigma_init must be > 0")
        self.dim = int(dim)
        self.count = 0
        self.mean = np.zeros(self.dim)
        self.m2 = np.zeros(self.dim)
        self.sigma_floor = float(sigma_floor)
        self.sigma_init = float(sigma_init)

    def update(self, obs) -> "SmirlBuffer":
        obs = np.asarray(obs, dtype=np.float64)
        if obs.shape != (self.dim,):
            raise ValueError(f"observation shape {obs.shape} does not match buffer dim {self.dim}")
        self.count += 1
        delta = obs - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (obs - self.mean)
        return self

    @property
    def sigma(self) -> np.ndarray:
        if self.count < 2:
            return np.full(self.dim, self.sigma_init)
        return np.maximum(self.sigma_floor, np.sqrt(self.m2 / (self.count - 1)))

    def snapshot(self) -> dict:
        return {"count": self.count, "mean": self.mean.tolist(), "m2": self.m2.tolist()}

    @classmethod
    def from_snapshot(cls, snap: dict, sigma_floor: float = DEFAULT_SIGMA_FLOOR,
                      sigma_init: float = DEFAULT_SIGMA_INIT) -> "SmirlBuffer":
        buf = cls(dim=len(snap["mean"]), sigma_floor=sigma_floor, sigma_init=sigma_init)
        buf.count = int(snap["count"])
        buf.mean = np.asarray(snap["mean"], dtype=np.float64)
        buf.m2 = np.asarray(snap["m2"], dtype=np.float64)
        return buf


def buffer_update(buf: SmirlBuffer, obs) -> SmirlBuffer:
    """Insert one observation into the running statistics."""
    return buf.update(obs)


def smirl_reward(buf: SmirlBuffer, obs) -> float:
    """Familiarity reward: -sum_i(ln sigma_i + (s_i - mu_i)^2 / (2 sigma_i^2)).

    This is the per-dimension Gaussian log-likelihood of `obs` under the
    buffer statistics, with the constant (dim/2)*ln(2*pi) dropped. It must be
    evaluated against the buffer state *before* the observation is inserted.
    """
    if buf.count < 1:
        raise ValueError("smirl_reward requires at least one buffered observation")
    obs = np.asarray(obs, dtype=np.float64)
    if obs.shape != (buf.dim,):
        raise ValueError(f"observation shape {obs.shape} does not match buffer dim {buf.dim}")
    sigma = buf.sigma
    diff = obs - buf.mean
    return float(-np.sum(np.log(sigma) + diff * diff / (2.0 * sigma * sigma)))


@dataclass
class AugmentedObservation:
    """Raw observation extended with the state-model sufficient statistics."""

    obs: np.ndarray
    mean: np.ndarray
    sigma: np.ndarray
    count_normalized: float

    def flatten(self) -> np.ndarray:
        return np.concatenate((self.obs, self.mean, self.sigma, [self.count_normalized]))


def augment_obs(buf: SmirlBuffer, obs, max_steps: int) -> AugmentedObservation:
    """Attach the current buffer statistics to an observation (3*dim + 1 values)."""
    if max_steps <= 0:
        raise ValueError("max_steps must be > 0")
    obs = np.asarray(obs, dtype=np.float64)
    return AugmentedObservation(
        obs=obs.copy(),
        mean=buf.mean.copy(),
        sigma=buf.sigma,
        count_normalized=buf.count / float(max_steps),
    )


def combined_reward(r_energy: float, r_smirl: float, cfg: SmirlConfig) -> float:
    """Training reward: energy reward plus alpha-weighted familiarity reward."""
    return r_energy + cfg.alpha * r_smirl
