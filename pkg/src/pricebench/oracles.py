"""Independent brute-force reference implementations.

These deliberately avoid the code paths they are used to check: two-pass
batch statistics instead of streaming updates, scipy densities instead of the
hand-written ones, explicit loops instead of vectorised recursions. The CLI
`oracle` subcommand prints their values on fixed reference inputs.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import stats


def batch_mean_std(samples) -> tuple[np.ndarray, np.ndarray]:
    """Two-pass sample mean and (n-1)-normalised standard deviation per column."""
    arr = np.asarray(samples, dtype=np.float64)
    return arr.mean(axis=0), arr.std(axis=0, ddof=1)


def gaussian_logpdf_sum(x, mean, sigma) -> float:
    """Sum of independent Gaussian log-densities via scipy."""
    return float(np.sum(stats.norm.logpdf(x, loc=mean, scale=sigma)))


def smirl_reward_reference(x, mean, sigma) -> float:
    """Familiarity reward as exact log-pdf plus the dropped (dim/2)ln(2*pi)."""
    x = np.asarray(x, dtype=np.float64)
    return gaussian_logpdf_sum(x, mean, sigma) + 0.5 * x.size * math.log(2.0 * math.pi)


def worker_response_reference(prices, baseline, elasticity) -> list[float]:
    """Load-shifting closed form evaluated with scalar math only."""
    weights = [b * math.exp(-elasticity * p) for b, p in zip(baseline, prices)]
    total = sum(baseline)
    wsum = sum(weights)
    return [total * w / wsum for w in weights]


def neg_log_dot(demand, grid) -> float:
    """Energy reward recomputed with a scalar dot product."""
    cost = sum(d * g for d, g in zip(demand, grid))
    return -math.log(cost)


def gae_reference(rewards, values, dones, last_value, gamma, lam):
    """Advantages by direct summation of discounted TD errors (no recursion)."""
    n = len(rewards)
    vals = list(values) + [last_value]
    deltas = [rewards[t] + gamma * vals[t + 1] * (1.0 - dones[t]) - vals[t]
              for t in range(n)]
    adv = []
    for t in range(n):
        acc = 0.0
        factor = 1.0
        for k in range(t, n):
            acc += factor * deltas[k]
            if dones[k]:
                break
            factor *= gamma * lam
        adv.append(acc)
    returns = [a + v for a, v in zip(adv, values)]
    return np.array(adv), np.array(returns)


def mlp_forward_reference(x, w1, b1, w2, b2, w3, b3) -> list[float]:
    """Two-hidden-layer tanh network evaluated with nested scalar loops."""

    def dense(vec, w, b, activation):
        out = []
        for j in range(len(b)):
            acc = b[j]
            for i, v in enumerate(vec):
                acc += v * w[i][j]
            out.append(activation(acc))
        return out

    h1 = dense(list(x), w1.tolist(), b1.tolist(), math.tanh)
    h2 = dense(h1, w2.tolist(), b2.tolist(), math.tanh)
    return dense(h2, w3.tolist(), b3.tolist(), lambda z: z)


def gaussian_entropy(variance: float) -> float:
    """Differential entropy of a normal variable: 0.5 ln(2 pi e var)."""
    return 0.5 * math.log(2.0 * math.pi * math.e * variance)


def series_mean_std(values) -> tuple[float, float]:
    """Two-pass mean and population standard deviation with scalar arithmetic."""
    vals = [float(v) for v in values]
    n = len(vals)
    mean = sum(vals) / n
    var = sum((v - mean) ** 2 for v in vals) / n
    return mean, math.sqrt(var)


def simplex_coordinate_moments(dim: int, total: float) -> tuple[float, float]:
    """Mean and std of one coordinate of a uniform draw from the scaled simplex.

    Coordinates are total * Dirichlet(1,...,1) marginals, i.e. Beta(1, dim-1):
    mean total/dim and std total*sqrt(dim-1)/(dim*sqrt(dim+1)).
    """
    mean = total / dim
    std = total * math.sqrt(dim - 1.0) / (dim * math.sqrt(dim + 1.0))
    return mean, std


def reference_report() -> list[tuple[str, object]]:
    """Fixed catalogue of oracle evaluations used by the CLI `oracle` subcommand."""
    out: list[tuple[str, object]] = []

    unit = [1.0] * 10
    spike = [0.0] * 9 + [1.0]
    shifted = worker_response_reference(spike, unit, 1.0)
    out.append(("worker_response(b=1x10, beta=1, p=e_10) hour10", shifted[9]))
    out.append(("worker_response(b=1x10, beta=1, p=e_10) hours1-9", shifted[0]))

    from .env import DEFAULT_BASELINE, DEFAULT_GRID
    uniform_demand = worker_response_reference([5.0] * 10, list(DEFAULT_BASELINE), 1.0)
    out.append(("energy_reward(default baseline, uniform prices)",
                neg_log_dot(uniform_demand, DEFAULT_GRID)))

    rng = np.random.default_rng(20240811)
    obs = rng.normal(1.0, 0.5, size=10)
    mean = rng.normal(1.0, 0.2, size=10)
    sigma = rng.uniform(0.3, 1.5, size=10)
    out.append(("smirl_reward(seeded random case)",
                smirl_reward_reference(obs, mean, sigma)))

    samples = rng.normal(0.0, 1.0, size=(1000, 3))
    m, s = batch_mean_std(samples)
    out.append(("batch_mean(seeded 1000x3) dim0", float(m[0])))
    out.append(("batch_std(seeded 1000x3) dim0", float(s[0])))

    rewards = rng.normal(size=30)
    values = rng.normal(size=30)
    dones = np.zeros(30)
    dones[14] = 1.0
    adv, _ = gae_reference(rewards.tolist(), values.tolist(), dones.tolist(),
                           0.5, 0.99, 0.95)
    out.append(("gae(seeded 30-step, done at t=14) A_0", float(adv[0])))

    out.append(("gaussian_entropy(var=1)", gaussian_entropy(1.0)))
    out.append(("gaussian_entropy(var=1e-12)", gaussian_entropy(1e-12)))
    out.append(("bin mean/std of 1..100", series_mean_std(range(1, 101))))
    out.append(("simplex moments(dim=10, C=10)", simplex_coordinate_moments(10, 10.0)))
    return out
