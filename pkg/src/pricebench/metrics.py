"""Rolling sample-entropy tracking, series binning and the per-step log schema."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LN_2PI_E = math.log(2.0 * math.pi * math.e)
DEFAULT_WINDOW = 100
DEFAULT_BIN = 100
DEFAULT_VARIANCE_FLOOR = 1e-12
THRESHOLD_TOLERANCE = 0.05

CSV_COLUMNS = (
    ["step", "seed", "alpha", "r_energy", "r_smirl", "r_combined", "sample_entropy"]
    + [f"price_{i}" for i in range(1, 11)]
    + [f"demand_{i}" for i in range(1, 11)]
)


class EntropyTracker:
    """Gaussian sample entropy of a FIFO window of demand profiles.

    Each hour is treated as an independent normal variable; the tracker
    reports the summed per-hour entropies 1/2 * ln(2*pi*e*var_i) computed
    from the sample variance of the window. With fewer than two entries the
    entropy is undefined and `entropy()` returns None.
    """

    def __init__(self, dim: int = 10, window: int = DEFAULT_WINDOW,
                 variance_floor: float = DEFAULT_VARIANCE_FLOOR):
        if window < 1:
            raise ValueError("window must be >= 1")
        if variance_floor <= 0.0:
            raise ValueError("variance_floor must be > 0")
        self.dim = int(dim)
        self.window = int(window)
        self.variance_floor = float(variance_floor)
        self._buf = np.zeros((self.window, self.dim))
        self._filled = 0
        self._next = 0

    def add(self, obs) -> None:
        obs = np.asarray(obs, dtype=np.float64)
        if obs.shape != (self.dim,):
            raise ValueError(f"observation shape {obs.shape} does not match dim {self.dim}")
        self._buf[self._next] = obs
        self._next = (self._next + 1) % self.window
        self._filled = min(self._filled + 1, self.window)

    def __len__(self) -> int:
        return self._filled

    def entropy(self) -> float | None:
        if self._filled < 2:
            return None
        var = np.var(self._buf[: self._filled], axis=0, ddof=1)
        var = np.maximum(self.variance_floor, var)
        return float(np.sum(0.5 * (LN_2PI_E + np.log(var))))


def bin_series(values, bin_size: int = DEFAULT_BIN) -> list[tuple[float, float]]:
    """Mean/std over consecutive non-overlapping bins; a final partial bin is kept."""
    if bin_size < 1:
        raise ValueError("bin_size must be >= 1")
    values = np.asarray(values, dtype=np.float64)
    out = []
    for start in range(0, len(values), bin_size):
        chunk = values[start:start + bin_size]
        out.append((float(chunk.mean()), float(chunk.std())))
    return out


def steps_to_threshold(bin_means, theta: float,
                       tolerance: float = THRESHOLD_TOLERANCE) -> int | None:
    """First bin index at or above theta with every later bin >= theta - tolerance."""
    if not math.isfinite(theta):
        raise ValueError("theta must be finite")
    means = [float(m) for m in bin_means]
    best = None
    suffix_min = math.inf
    for i in range(len(means) - 1, -1, -1):
        if means[i] >= theta and suffix_min >= theta - tolerance:
            best = i
        suffix_min = min(suffix_min, means[i])
    return best


def threshold_at_fraction(reference: float, fraction: float = 0.95) -> float:
    """Reward level `fraction` of the way to a reference value.

    The shortfall is measured in units of |reference| so the level is always
    slightly easier than the reference itself, whatever its sign.
    """
    return reference - (1.0 - fraction) * abs(reference)


@dataclass
class RunLog:
    """Per-step record arrays for one training run (one row per day)."""

    seed: int
    alpha: float
    step: np.ndarray
    r_energy: np.ndarray
    r_smirl: np.ndarray
    r_combined: np.ndarray
    sample_entropy: np.ndarray  # NaN encodes the warm-up sentinel
    prices: np.ndarray          # (n, 10)
    demand: np.ndarray          # (n, 10)
    truncation_note: str | None = None

    def __len__(self) -> int:
        return len(self.step)


def empty_run_log(seed: int, alpha: float) -> RunLog:
    return RunLog(
        seed=seed, alpha=alpha,
        step=np.zeros(0, dtype=np.int64),
        r_energy=np.zeros(0), r_smirl=np.zeros(0), r_combined=np.zeros(0),
        sample_entropy=np.zeros(0),
        prices=np.zeros((0, 10)), demand=np.zeros((0, 10)),
    )


def _fmt(x: float) -> str:
    # repr of a Python float is the shortest round-trippable decimal form
    return repr(float(x))


def write_step_csv(path, log: RunLog) -> None:
    """Write the run log in the fixed column order, one line-feed-terminated row per step."""
    lines = [",".join(CSV_COLUMNS)]
    ent_list = log.sample_entropy.tolist()
    r_e = log.r_energy.tolist()
    r_s = log.r_smirl.tolist()
    r_c = log.r_combined.tolist()
    prices = log.prices.tolist()
    demand = log.demand.tolist()
    seed_s = str(int(log.seed))
    alpha_s = _fmt(log.alpha)
    for i, step in enumerate(log.step.tolist()):
        ent = ent_list[i]
        fields = [str(step), seed_s, alpha_s, _fmt(r_e[i]), _fmt(r_s[i]), _fmt(r_c[i]),
                  "" if math.isnan(ent) else _fmt(ent)]
        fields.extend(_fmt(v) for v in prices[i])
        fields.extend(_fmt(v) for v in demand[i])
        lines.append(",".join(fields))
    if log.truncation_note:
        lines.append(f"# {log.truncation_note}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_step_csv(path) -> RunLog:
    """Read a step CSV back into arrays; blank sample_entropy fields become NaN."""
    with open(path, "r") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines:
        raise ValueError(f"{path}: empty file")
    header = lines[0].split(",")
    if header != CSV_COLUMNS:
        raise ValueError(f"{path}: unexpected header {header!r}")
    note = None
    rows = []
    for ln in lines[1:]:
        if not ln:
            continue
        if ln.startswith("#"):
            note = ln[1:].strip()
            continue
        rows.append(ln.split(","))
    n = len(rows)
    log = RunLog(
        seed=int(rows[0][1]) if n else 0,
        alpha=float(rows[0][2]) if n else 0.0,
        step=np.array([int(r[0]) for r in rows], dtype=np.int64),
        r_energy=np.array([float(r[3]) for r in rows]),
        r_smirl=np.array([float(r[4]) for r in rows]),
        r_combined=np.array([float(r[5]) for r in rows]),
        sample_entropy=np.array([float(r[6]) if r[6] else math.nan for r in rows]),
        prices=np.array([[float(v) for v in r[7:17]] for r in rows]).reshape(n, 10),
        demand=np.array([[float(v) for v in r[17:27]] for r in rows]).reshape(n, 10),
        truncation_note=note,
    )
    return log
