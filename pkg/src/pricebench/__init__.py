"""Desk-scale bench for surprise-regularised price-setting RL on a simulated
office demand-response day."""

from .agent import PpoConfig, TrainResult, TrainingAbort, train
from .config import ConfigError, ExperimentConfig
from .env import Environment, WorkerConfig, energy_reward, worker_response
from .metrics import EntropyTracker, RunLog, bin_series, steps_to_threshold
from .sampler import FixedLoadConfig, fixed_price_day, project_to_l1, sample_fixed_l1
from .smirl import (AugmentedObservation, SmirlBuffer, SmirlConfig, augment_obs,
                    buffer_update, combined_reward, smirl_reward)

__version__ = "0.1.0"

__all__ = [
    "AugmentedObservation", "ConfigError", "Environment", "EntropyTracker",
    "ExperimentConfig", "FixedLoadConfig", "PpoConfig", "RunLog", "SmirlBuffer",
    "SmirlConfig", "TrainResult", "TrainingAbort", "WorkerConfig", "augment_obs",
    "bin_series", "buffer_update", "combined_reward", "energy_reward",
    "fixed_price_day", "project_to_l1", "sample_fixed_l1", "smirl_reward",
    "steps_to_threshold", "train", "worker_response",
]
