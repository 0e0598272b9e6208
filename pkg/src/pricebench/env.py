"""Simulated office demand-response environment.

One step is one working day: the price-setting agent posts a vector of ten
hourly prices, a simulated worker population reallocates its fixed daily
energy budget in response, and the agent is rewarded for lowering the total
bill paid to the grid under a static time-of-use schedule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HOURS = 10
DEFAULT_P_MAX = 10.0
DEFAULT_EPISODE_LENGTH = 30

# Time-of-use schedule: flat off-peak with a contiguous peak over hours 5-8.
DEFAULT_GRID = (0.10, 0.10, 0.10, 0.10, 0.30, 0.30, 0.30, 0.30, 0.10, 0.10)
DEFAULT_BASELINE = (2.0,) * HOURS


def as_price_vector(prices, p_max: float = DEFAULT_P_MAX) -> np.ndarray:
    """Validate and convert a daily price vector (length 10, entries in [0, p_max])."""
    p = np.asarray(prices, dtype=np.float64)
    if p.shape != (HOURS,):
        raise ValueError(f"price vector must have {HOURS} entries, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("price vector contains non-finite entries")
    if np.any(p < 0.0) or np.any(p > p_max):
        raise ValueError(f"price vector entries must lie in [0, {p_max}]")
    return p


def as_demand_profile(demand) -> np.ndarray:
    """Validate and convert a daily demand profile (length 10, non-negative kWh)."""
    d = np.asarray(demand, dtype=np.float64)
    if d.shape != (HOURS,):
        raise ValueError(f"demand profile must have {HOURS} entries, got shape {d.shape}")
    if not np.all(np.isfinite(d)) or np.any(d < 0.0):
        raise ValueError("demand profile entries must be finite and >= 0")
    return d


def as_grid_schedule(prices) -> np.ndarray:
    """Validate and convert a grid price schedule (length 10, strictly positive)."""
    g = np.asarray(prices, dtype=np.float64)
    if g.shape != (HOURS,):
        raise ValueError(f"grid schedule must have {HOURS} entries, got shape {g.shape}")
    if not np.all(np.isfinite(g)) or np.any(g <= 0.0):
        raise ValueError("grid schedule entries must be finite and > 0")
    return g


@dataclass
class WorkerConfig:
    """Price-elastic worker population with a conserved daily energy total."""

    baseline: np.ndarray
    elasticity: float = 1.0
    noise_scale: float = 0.0

    def __post_init__(self):
        self.baseline = as_demand_profile(self.baseline)
        if self.baseline.sum() <= 0.0:
            raise ValueError("baseline demand must have a positive total")
        self.elasticity = float(self.elasticity)
        if self.elasticity < 0.0:
            raise ValueError("elasticity must be >= 0")
        self.noise_scale = float(self.noise_scale)
        if self.noise_scale < 0.0:
            raise ValueError("noise_scale must be >= 0")


def worker_response(prices: np.ndarray, cfg: WorkerConfig,
                    rng: np.random.Generator | None = None) -> np.ndarray:
    """Daily demand under exponential price-elastic load shifting.

    Hourly weights b_i * exp(-beta * p_i) are renormalised so the day's total
    equals the baseline total: prices move energy between hours but never
    change how much is consumed overall. Optional multiplicative noise is
    rescaled back onto the same total.
    """
    weights = cfg.baseline * np.exp(-cfg.elasticity * prices)
    total = cfg.baseline.sum()
    demand = total * weights / weights.sum()
    if cfg.noise_scale > 0.0:
        if rng is None:
            raise ValueError("noise_scale > 0 requires a random generator")
        factors = np.maximum(0.0, 1.0 + cfg.noise_scale * rng.standard_normal(HOURS))
        noisy = demand * factors
        s = noisy.sum()
        if s > 0.0:  # an all-zero draw (probability ~0) keeps the noise-free profile
            demand = noisy * (total / s)
    return demand


def energy_reward(demand: np.ndarray, grid: np.ndarray) -> float:
    """Negated log of the day's grid bill, so maximising reward minimises cost."""
    cost = float(np.dot(demand, grid))
    if cost <= 0.0:
        raise ValueError(f"non-positive daily cost {cost!r}: degenerate zero-demand day")
    return -math.log(cost)


class Environment:
    """Day-per-step environment mapping agent prices to worker demand and reward.

    The worker has no memory across days; the only mutable state is the step
    counter (for episode boundaries) and the noise stream.
    """

    def __init__(self, worker: WorkerConfig, grid=None, rng_seed: int = 0,
                 episode_length: int = DEFAULT_EPISODE_LENGTH,
                 p_max: float = DEFAULT_P_MAX):
        self.worker = worker
        self.grid = as_grid_schedule(DEFAULT_GRID if grid is None else grid)
        self.rng_seed = int(rng_seed)
        self.episode_length = int(episode_length)
        if self.episode_length < 1:
            raise ValueError("episode_length must be >= 1")
        self.p_max = float(p_max)
        if self.p_max <= 0.0:
            raise ValueError("p_max must be > 0")
        self.step_count = 0
        self._rng = np.random.default_rng(self.rng_seed)

    @property
    def obs_scale(self) -> float:
        """Total baseline energy; the natural scale of any demand observation."""
        return float(self.worker.baseline.sum())

    def reset(self) -> np.ndarray:
        """Start a run: zero the step counter and observe demand at mid-range prices."""
        self.step_count = 0
        mid = np.full(HOURS, self.p_max / 2.0)
        return worker_response(mid, self.worker, self._rng)

    def step(self, action) -> tuple[np.ndarray, float, bool]:
        """Apply one day's prices; returns (demand, energy reward, episode-end flag)."""
        prices = as_price_vector(action, self.p_max)
        obs = worker_response(prices, self.worker, self._rng)
        reward = energy_reward(obs, self.grid)
        self.step_count += 1
        done = (self.step_count % self.episode_length) == 0
        return obs, reward, done
