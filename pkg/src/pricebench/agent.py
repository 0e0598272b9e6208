"""Diagonal-Gaussian MLP policy with exact-backprop clipped-surrogate PPO.

Everything is plain numpy: two tanh trunks of width 64 (policy mean and state
value), a state-independent log-std vector, generalized advantage estimation
and minibatched SGD on the clipped PPO objective. Gradients are derived by
hand so they can be checked against finite differences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import metrics, sampler, smirl

LN_2PI = math.log(2.0 * math.pi)
LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
HIDDEN_WIDTH = 64

# Distinct sub-stream key so the agent's draws never collide with the
# environment generator seeded from the same run seed.
_AGENT_STREAM = 0x5E11


class TrainingAbort(RuntimeError):
    """Raised when an update produces a non-finite loss; carries the partial log."""

    def __init__(self, message: str, partial_log: metrics.RunLog | None = None):
        super().__init__(message)
        self.partial_log = partial_log


@dataclass
class PpoConfig:
    learning_rate: float = 0.003
    batch_size: int = 256
    minibatch_size: int = 32
    clip: float = 0.3
    epochs_per_batch: int = 8
    gamma: float = 0.99
    gae_lambda: float = 0.95
    value_coeff: float = 0.5
    entropy_coeff: float = 0.0
    max_steps: int = 20000

    def __post_init__(self):
        if not 0.0 < self.clip < 1.0:
            raise ValueError("clip must lie in (0, 1)")
        if not 0 < self.minibatch_size <= self.batch_size:
            raise ValueError("minibatch_size must lie in (0, batch_size]")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs_per_batch < 1:
            raise ValueError("epochs_per_batch must be >= 1")
        if not 0.0 <= self.gamma <= 1.0 or not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError("gamma and gae_lambda must lie in [0, 1]")
        if self.max_steps < 0:
            raise ValueError("max_steps must be >= 0")


def init_policy_params(obs_dim: int, action_dim: int, rng: np.random.Generator,
                       hidden: int = HIDDEN_WIDTH, log_std_init: float = 0.0) -> dict:
    """Seeded parameter dict for the policy and value networks.

    Hidden layers use 1/sqrt(fan_in) Gaussian weights; the mean head is scaled
    down so the initial policy stays near the sigmoid midpoint.
    """

    def layer(n_in, n_out, scale=1.0):
        return rng.normal(0.0, scale / math.sqrt(n_in), size=(n_in, n_out))

    params = {
        "pi_w1": layer(obs_dim, hidden), "pi_b1": np.zeros(hidden),
        "pi_w2": layer(hidden, hidden), "pi_b2": np.zeros(hidden),
        "pi_w3": layer(hidden, action_dim, scale=0.01), "pi_b3": np.zeros(action_dim),
        "log_std": np.full(action_dim, float(log_std_init)),
        "v_w1": layer(obs_dim, hidden), "v_b1": np.zeros(hidden),
        "v_w2": layer(hidden, hidden), "v_b2": np.zeros(hidden),
        "v_w3": layer(hidden, 1), "v_b3": np.zeros(1),
    }
    params["log_std"] = np.clip(params["log_std"], LOG_STD_MIN, LOG_STD_MAX)
    return params


def _trunk_forward(x, w1, b1, w2, b2, w3, b3):
    h1 = np.tanh(x @ w1 + b1)
    h2 = np.tanh(h1 @ w2 + b2)
    return h2 @ w3 + b3, (x, h1, h2)


def _trunk_backward(dout, cache, w2, w3):
    x, h1, h2 = cache
    dw3 = h2.T @ dout
    db3 = dout.sum(axis=0)
    dz2 = (dout @ w3.T) * (1.0 - h2 * h2)
    dw2 = h1.T @ dz2
    db2 = dz2.sum(axis=0)
    dz1 = (dz2 @ w2.T) * (1.0 - h1 * h1)
    dw1 = x.T @ dz1
    db1 = dz1.sum(axis=0)
    return dw1, db1, dw2, db2, dw3, db3


def policy_mean(params: dict, x: np.ndarray) -> np.ndarray:
    """Deterministic pre-squash action mean for one observation or a batch."""
    single = x.ndim == 1
    out, _ = _trunk_forward(np.atleast_2d(x), params["pi_w1"], params["pi_b1"],
                            params["pi_w2"], params["pi_b2"],
                            params["pi_w3"], params["pi_b3"])
    return out[0] if single else out


def value(params: dict, x: np.ndarray):
    """State-value estimate; scalar for a single observation, array for a batch."""
    single = x.ndim == 1
    out, _ = _trunk_forward(np.atleast_2d(x), params["v_w1"], params["v_b1"],
                            params["v_w2"], params["v_b2"],
                            params["v_w3"], params["v_b3"])
    v = out[:, 0]
    return float(v[0]) if single else v


def policy_logprob(params: dict, x: np.ndarray, raw_action: np.ndarray):
    """Diagonal-Gaussian log-density of a pre-squash action."""
    mean = policy_mean(params, x)
    log_std = params["log_std"]
    var = np.exp(2.0 * log_std)
    diff = raw_action - mean
    axis = diff.ndim - 1
    lp = -0.5 * np.sum(diff * diff / var, axis=axis) \
        - np.sum(log_std) - 0.5 * diff.shape[-1] * LN_2PI
    return float(lp) if diff.ndim == 1 else lp


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def squash_action(raw: np.ndarray, p_max: float) -> np.ndarray:
    """Fixed monotone post-map from pre-squash space to the price box (0, p_max)."""
    return p_max * _sigmoid(raw)


def policy_act(params: dict, x: np.ndarray, rng: np.random.Generator,
               p_max: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Sample a pre-squash action, squash it into prices, and return its log-density."""
    mean = policy_mean(params, x)
    std = np.exp(params["log_std"])
    raw = mean + std * rng.standard_normal(mean.shape[0])
    logprob = policy_logprob(params, x, raw)
    return raw, squash_action(raw, p_max), logprob


def compute_gae(rewards, values, dones, last_value: float, gamma: float,
                lam: float, normalize: bool = True):
    """Generalized advantage estimation over a (possibly multi-episode) rollout.

    delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t)
    A_t     = delta_t + gamma * lam * (1 - done_t) * A_{t+1}

    Returns (advantages, returns) with returns = raw A + V; advantages are
    normalized to zero mean / unit std when requested (the degenerate
    all-equal case is left at zero).
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    n = len(rewards)
    if n == 0:
        raise ValueError("cannot compute advantages for an empty trajectory")
    adv = np.zeros(n)
    next_adv = 0.0
    next_value = float(last_value)
    for t in range(n - 1, -1, -1):
        not_done = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * not_done - values[t]
        next_adv = delta + gamma * lam * not_done * next_adv
        adv[t] = next_adv
        next_value = values[t]
    returns = adv + values
    if normalize:
        centred = adv - adv.mean()
        std = centred.std()
        # epsilon keeps fully-converged batches (std ~ 0) from amplifying
        # round-off noise into huge policy updates
        adv = centred / (std + 1e-8) if std > 0.0 else centred
    return adv, returns


def ppo_loss_and_grads(params: dict, x: np.ndarray, raw: np.ndarray,
                       logprob_old: np.ndarray, adv: np.ndarray,
                       returns: np.ndarray, cfg: PpoConfig):
    """Clipped-surrogate PPO loss on one minibatch with exact gradients.

    L = -mean(min(rho*A, clip(rho, 1-eps, 1+eps)*A))
        + value_coeff * mean((V - ret)^2) - entropy_coeff * H(pi)
    """
    m = x.shape[0]
    mean, pi_cache = _trunk_forward(x, params["pi_w1"], params["pi_b1"],
                                    params["pi_w2"], params["pi_b2"],
                                    params["pi_w3"], params["pi_b3"])
    log_std = params["log_std"]
    var = np.exp(2.0 * log_std)
    diff = raw - mean
    lp = -0.5 * np.sum(diff * diff / var, axis=1) - np.sum(log_std) \
        - 0.5 * raw.shape[1] * LN_2PI

    ratio = np.exp(lp - logprob_old)
    clipped = np.clip(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip)
    surr1 = ratio * adv
    surr2 = clipped * adv
    unclipped = surr1 <= surr2
    policy_loss = -np.minimum(surr1, surr2).mean()

    # When the clipped branch is active the ratio sits outside the clip range,
    # so its contribution is constant in the parameters: gradient flows only
    # through samples on the unclipped branch.
    dlp = np.where(unclipped, -adv * ratio, 0.0) / m
    dmean = dlp[:, None] * (diff / var)
    dlog_std = (dlp[:, None] * (diff * diff / var - 1.0)).sum(axis=0)

    entropy = np.sum(log_std) + 0.5 * raw.shape[1] * (1.0 + LN_2PI)
    if cfg.entropy_coeff != 0.0:
        dlog_std -= cfg.entropy_coeff

    v_out, v_cache = _trunk_forward(x, params["v_w1"], params["v_b1"],
                                    params["v_w2"], params["v_b2"],
                                    params["v_w3"], params["v_b3"])
    v = v_out[:, 0]
    v_err = v - returns
    value_loss = cfg.value_coeff * np.mean(v_err * v_err)
    dv = (2.0 * cfg.value_coeff / m) * v_err

    total_loss = policy_loss + value_loss - cfg.entropy_coeff * entropy

    g = {}
    g["pi_w1"], g["pi_b1"], g["pi_w2"], g["pi_b2"], g["pi_w3"], g["pi_b3"] = \
        _trunk_backward(dmean, pi_cache, params["pi_w2"], params["pi_w3"])
    g["v_w1"], g["v_b1"], g["v_w2"], g["v_b2"], g["v_w3"], g["v_b3"] = \
        _trunk_backward(dv[:, None], v_cache, params["v_w2"], params["v_w3"])
    g["log_std"] = dlog_std

    stats = {
        "policy_loss": float(policy_loss),
        "value_loss": float(value_loss),
        "entropy": float(entropy),
        "clip_fraction": float(np.mean((ratio < 1.0 - cfg.clip) | (ratio > 1.0 + cfg.clip))),
    }
    return float(total_loss), g, stats


class TransitionBatch:
    """Fixed-capacity on-policy rollout storage (struct of arrays)."""

    def __init__(self, capacity: int, obs_dim: int, action_dim: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.raw = np.zeros((capacity, action_dim))
        self.action = np.zeros((capacity, action_dim))
        self.logprob = np.zeros(capacity)
        self.value = np.zeros(capacity)
        self.r_combined = np.zeros(capacity)
        self.r_energy = np.zeros(capacity)
        self.r_smirl = np.zeros(capacity)
        self.done = np.zeros(capacity)
        self.last_value = 0.0
        self.size = 0

    def add(self, obs, raw, action, logprob, value_est, r_combined,
            r_energy, r_smirl, done) -> None:
        i = self.size
        self.obs[i] = obs
        self.raw[i] = raw
        self.action[i] = action
        self.logprob[i] = logprob
        self.value[i] = value_est
        self.r_combined[i] = r_combined
        self.r_energy[i] = r_energy
        self.r_smirl[i] = r_smirl
        self.done[i] = done
        self.size += 1

    @property
    def full(self) -> bool:
        return self.size == self.capacity

    def clear(self) -> None:
        self.size = 0


def ppo_update(params: dict, batch: TransitionBatch, cfg: PpoConfig,
               rng: np.random.Generator):
    """Run epochs_per_batch shuffled minibatch SGD passes; returns (new params, stats)."""
    if batch.size != cfg.batch_size:
        raise ValueError(f"batch holds {batch.size} transitions, expected {cfg.batch_size}")
    adv, returns = compute_gae(batch.r_combined[:batch.size], batch.value[:batch.size],
                               batch.done[:batch.size], batch.last_value,
                               cfg.gamma, cfg.gae_lambda)
    new = {k: v.copy() for k, v in params.items()}
    agg: dict[str, float] = {}
    n_minibatches = 0
    for _ in range(cfg.epochs_per_batch):
        order = rng.permutation(cfg.batch_size)
        for start in range(0, cfg.batch_size, cfg.minibatch_size):
            idx = order[start:start + cfg.minibatch_size]
            loss, grads, stats = ppo_loss_and_grads(
                new, batch.obs[idx], batch.raw[idx], batch.logprob[idx],
                adv[idx], returns[idx], cfg)
            if not math.isfinite(loss):
                raise TrainingAbort(f"non-finite PPO loss {loss!r}")
            for key, grad in grads.items():
                new[key] -= cfg.learning_rate * grad
            new["log_std"] = np.clip(new["log_std"], LOG_STD_MIN, LOG_STD_MAX)
            for key, val in stats.items():
                agg[key] = agg.get(key, 0.0) + val
            agg["total_loss"] = agg.get("total_loss", 0.0) + loss
            n_minibatches += 1
    return new, {k: v / n_minibatches for k, v in agg.items()}


@dataclass
class ObsScaler:
    """Fixed constants that bring the augmented observation near unit scale."""

    total_baseline: float
    sigma_init: float
    dim: int

    def __post_init__(self):
        self._scale = np.concatenate((
            np.full(self.dim, 1.0 / self.total_baseline),
            np.full(self.dim, 1.0 / self.total_baseline),
            np.full(self.dim, 1.0 / self.sigma_init),
            [1.0],
        ))

    def __call__(self, flat_aug: np.ndarray) -> np.ndarray:
        return flat_aug * self._scale


@dataclass
class TrainResult:
    params: dict
    log: metrics.RunLog
    buffer: smirl.SmirlBuffer
    loss_history: list = field(default_factory=list)


def train(env, smirl_cfg: smirl.SmirlConfig, ppo_cfg: PpoConfig, seed: int, *,
          constrain_l1: str = "off", norm_target: float = 10.0,
          entropy_window: int = metrics.DEFAULT_WINDOW,
          variance_floor: float = metrics.DEFAULT_VARIANCE_FLOOR,
          buffer_reset: str = "run", log_smirl: bool = True) -> TrainResult:
    """Run the full training loop and return parameters, logs and buffer state.

    Per day: act, step the environment, score the new observation against the
    buffer statistics from *before* it is inserted, insert it, mix the
    combined reward, and store the transition; every batch_size days the
    policy takes a PPO update. With alpha = 0 the reward path reduces exactly
    to plain PPO while the buffer keeps tracking statistics for the log.

    constrain_l1 "project" rescales every emitted price vector to the target
    L1 norm; "sample" spends the first batch on uniform fixed-L1 exploration
    actions which are logged but excluded from PPO batches.
    """
    if constrain_l1 not in sampler.CONSTRAINT_MODES:
        raise ValueError(f"constrain_l1 must be one of {sampler.CONSTRAINT_MODES}")
    if buffer_reset not in ("run", "episode"):
        raise ValueError("buffer_reset must be 'run' or 'episode'")
    if constrain_l1 != "off" and norm_target > env.p_max * 1.0000000001:
        raise ValueError("norm_target above p_max can emit out-of-range prices")

    rng = np.random.default_rng(np.random.SeedSequence([int(seed), _AGENT_STREAM]))
    obs = env.reset()
    dim = obs.shape[0]
    buf = smirl.SmirlBuffer(dim=dim, sigma_floor=smirl_cfg.sigma_floor,
                            sigma_init=smirl_cfg.sigma_init)
    buf.update(obs)
    tracker = metrics.EntropyTracker(dim=dim, window=entropy_window,
                                     variance_floor=variance_floor)

    obs_dim = 3 * dim + 1
    scaler = ObsScaler(total_baseline=env.obs_scale, sigma_init=smirl_cfg.sigma_init,
                       dim=dim)
    params = init_policy_params(obs_dim, dim, rng)

    max_steps = ppo_cfg.max_steps
    n = max_steps
    rec_steps = np.arange(1, n + 1, dtype=np.int64)
    rec_r_energy = np.zeros(n)
    rec_r_smirl = np.zeros(n)
    rec_r_combined = np.zeros(n)
    rec_entropy = np.full(n, np.nan)
    rec_prices = np.zeros((n, dim))
    rec_demand = np.zeros((n, dim))

    def make_log(upto: int) -> metrics.RunLog:
        return metrics.RunLog(
            seed=int(seed), alpha=smirl_cfg.alpha,
            step=rec_steps[:upto],
            r_energy=rec_r_energy[:upto], r_smirl=rec_r_smirl[:upto],
            r_combined=rec_r_combined[:upto],
            sample_entropy=rec_entropy[:upto],
            prices=rec_prices[:upto], demand=rec_demand[:upto],
        )

    batch = TransitionBatch(ppo_cfg.batch_size, obs_dim, dim)
    loss_history: list = []
    explore_steps = ppo_cfg.batch_size if constrain_l1 == "sample" else 0

    x = scaler(smirl.augment_obs(buf, obs, max(max_steps, 1)).flatten())
    for t in range(n):
        exploring = t < explore_steps
        if exploring:
            action = sampler.sample_fixed_l1(dim, norm_target, rng)
            raw = logprob = value_est = None
        else:
            raw, action, logprob = policy_act(params, x, rng, env.p_max)
            if constrain_l1 == "project":
                action = sampler.project_to_l1(action, norm_target)
            value_est = value(params, x)

        obs, r_energy, done = env.step(action)
        r_smirl_val = smirl.smirl_reward(buf, obs) if log_smirl else 0.0
        if done and buffer_reset == "episode":
            buf = smirl.SmirlBuffer(dim=dim, sigma_floor=smirl_cfg.sigma_floor,
                                    sigma_init=smirl_cfg.sigma_init)
        buf.update(obs)
        r_comb = smirl.combined_reward(r_energy, r_smirl_val, smirl_cfg)
        tracker.add(obs)
        ent = tracker.entropy()

        rec_r_energy[t] = r_energy
        rec_r_smirl[t] = r_smirl_val
        rec_r_combined[t] = r_comb
        if ent is not None:
            rec_entropy[t] = ent
        rec_prices[t] = action
        rec_demand[t] = obs

        x_next = scaler(smirl.augment_obs(buf, obs, max(max_steps, 1)).flatten())
        if not exploring:
            batch.add(x, raw, action, logprob, value_est, r_comb, r_energy,
                      r_smirl_val, done)
            if batch.full:
                batch.last_value = value(params, x_next)
                try:
                    params, stats = ppo_update(params, batch, ppo_cfg, rng)
                except TrainingAbort as abort:
                    raise TrainingAbort(
                        f"{abort} at step {t + 1}", partial_log=make_log(t + 1)
                    ) from None
                loss_history.append(stats)
                batch.clear()
        x = x_next

    return TrainResult(params=params, log=make_log(n), buffer=buf,
                       loss_history=loss_history)
