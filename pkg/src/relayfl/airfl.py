"""Toy federated learning loop with over-the-air aggregation noise.

Linear regression with a bias term stands in for the deep model. The model
vector holds the weights followed by the bias. Gradient normalisation before
transmission and de-normalisation after reception are treated as exact
inverses, so the channel's only effect on learning is additive Gaussian error
on the gradient sum with per-coordinate variance equal to the schedule's MSE.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .scheduler import Schedule
from .topology import Seed, SystemParams, keyed_rng

_DATA = 11
_BATCH = 12
_NOISE = 13


class EmptyScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class FlState:
    model: np.ndarray
    learning_rate: float
    round: int = 0

    def __post_init__(self):
        if not np.all(np.isfinite(self.model)):
            raise ValueError("model has non-finite entries")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")


@dataclass(frozen=True)
class Shard:
    features: np.ndarray
    targets: np.ndarray
    owner: int

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[0] != self.targets.shape[0]:
            raise ValueError(f"shard {self.owner}: features/targets row mismatch")

    def __len__(self):
        return self.targets.shape[0]


def make_shards(seed: Seed, num_devices: int, dim: int = 16, shard_size: int = 256,
                label_noise: float = 0.1) -> tuple[list[Shard], np.ndarray]:
    """Synthetic i.i.d. shards and the planted model (weights then bias)."""
    rng = keyed_rng(seed, _DATA)
    truth = rng.standard_normal(dim + 1)
    shards = []
    for k in range(num_devices):
        x = rng.standard_normal((shard_size, dim))
        y = x @ truth[:-1] + truth[-1] + label_noise * rng.standard_normal(shard_size)
        shards.append(Shard(x, y, k))
    return shards, truth


def init_state(dim: int, learning_rate: float) -> FlState:
    return FlState(np.zeros(dim + 1), learning_rate)


def _residual(model: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x @ model[:-1] + model[-1] - y


def local_gradient(state: FlState, shard: Shard, batch_seed: Seed, params: SystemParams) -> np.ndarray:
    """Mean squared-error gradient over a uniform mini-batch of ``params.batch_size`` samples."""
    if len(shard) == 0:
        raise ValueError(f"shard {shard.owner} is empty")
    if params.batch_size > len(shard):
        raise ValueError(f"batch_size {params.batch_size} exceeds shard size {len(shard)}")
    idx = keyed_rng(batch_seed, _BATCH).choice(len(shard), size=params.batch_size, replace=False)
    x, y = shard.features[idx], shard.targets[idx]
    err = _residual(state.model, x, y)
    return np.append(x.T @ err, err.sum()) / params.batch_size


def aggregate_airtime(gradients: Sequence[np.ndarray], schedule: Schedule, noise_seed: Seed,
                      params: SystemParams) -> np.ndarray:
    """Gradient sum as received at the PS: exact sum plus Gaussian error of variance MSE."""
    if schedule.scheduled_count == 0 or len(gradients) == 0:
        raise EmptyScheduleError("cannot aggregate over an empty schedule")
    total = np.sum(gradients, axis=0)
    std = np.sqrt(schedule.mse(params))
    return total + std * keyed_rng(noise_seed, _NOISE).standard_normal(total.shape)


def global_update(state: FlState, aggregate: np.ndarray, count: int) -> FlState:
    if count < 1:
        raise ValueError("count must be >= 1")
    return FlState(state.model - state.learning_rate * aggregate / count, state.learning_rate, state.round + 1)


def global_loss(state: FlState, shards: Sequence[Shard]) -> float:
    """Sample-weighted mean of ``0.5 * (prediction - target)^2`` over all shards."""
    if not shards:
        raise ValueError("no shards")
    total = sum(0.5 * float(np.sum(_residual(state.model, s.features, s.targets) ** 2)) for s in shards)
    return total / sum(len(s) for s in shards)


def fl_round(state: FlState, schedule: Schedule, shards: Sequence[Shard], seed: Seed,
             params: SystemParams, noisy: bool = True) -> FlState:
    """One training round driven by ``schedule``; an empty schedule leaves the model alone."""
    members = sorted(schedule.scheduled)
    if not members:
        return FlState(state.model, state.learning_rate, state.round + 1)
    seed = [seed] if isinstance(seed, (int, np.integer)) else list(seed)
    grads = [local_gradient(state, shards[k], seed + [state.round, k], params) for k in members]
    if noisy:
        agg = aggregate_airtime(grads, schedule, seed + [state.round], params)
    else:
        agg = np.sum(grads, axis=0)
    return global_update(state, agg, len(members))
