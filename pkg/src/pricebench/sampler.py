"""Price vectors with a fixed daily L1 budget.

Under a constant hourly load c, the day's total posted price is
c * (p_1 + ... + p_10) = c * ||p||_1, so holding the L1 norm fixed makes that
total invariant to how the prices are spread across hours. Sampling uses
normalised standard exponentials, i.e. a uniform draw from the scaled simplex.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CONSTRAINT_MODES = ("off", "project", "sample")


@dataclass
class FixedLoadConfig:
    """Constant hourly load magnitude and the target price budget."""

    load_magnitude: float = 1.0
    norm_target: float = 10.0

    def __post_init__(self):
        self.load_magnitude = float(self.load_magnitude)
        self.norm_target = float(self.norm_target)
        # zero load is a degenerate but well-defined day (total price 0)
        if not np.isfinite(self.load_magnitude) or self.load_magnitude < 0.0:
            raise ValueError("load_magnitude must be finite and >= 0")
        if not np.isfinite(self.norm_target) or self.norm_target <= 0.0:
            raise ValueError("norm_target must be finite and > 0")


def sample_fixed_l1(dim: int, total: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from {p >= 0 : sum(p) = total}."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if total <= 0.0:
        raise ValueError("total must be > 0")
    while True:
        e = rng.standard_exponential(dim)
        s = e.sum()
        if s > 0.0:  # zero-sum draws have probability zero
            return total * (e / s)


def project_to_l1(p, total: float) -> np.ndarray:
    """Rescale a non-negative vector onto the simplex with the given L1 norm."""
    p = np.asarray(p, dtype=np.float64)
    if np.any(p < 0.0):
        raise ValueError("projection requires non-negative entries")
    s = p.sum()
    if s <= 0.0:
        raise ValueError("cannot project the zero vector onto a positive L1 sphere")
    return p * (total / s)


def fixed_price_day(p, cfg: FixedLoadConfig) -> float:
    """Total posted price over a day of constant load: c * ||p||_1."""
    p = np.asarray(p, dtype=np.float64)
    return cfg.load_magnitude * float(p.sum())
