"""Uniform ring replay buffer and running observation statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from torquegrasp.errors import ConfigError


@dataclass
class Batch:
    obs: np.ndarray
    act: np.ndarray
    rew: np.ndarray
    next_obs: np.ndarray
    done: np.ndarray

    def __len__(self) -> int:
        return len(self.rew)


class ReplayBuffer:
    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        if capacity < 1:
            raise ConfigError("replay capacity must be >= 1")
        self.capacity = int(capacity)
        self.obs = np.zeros((self.capacity, obs_dim))
        self.act = np.zeros((self.capacity, act_dim))
        self.rew = np.zeros(self.capacity)
        self.next_obs = np.zeros((self.capacity, obs_dim))
        self.done = np.zeros(self.capacity)
        self.cursor = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, obs, act, rew, next_obs, done) -> None:
        i = self.cursor
        self.obs[i] = obs
        self.act[i] = act
        self.rew[i] = rew
        self.next_obs[i] = next_obs
        self.done[i] = float(done)
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, batch_size: int) -> Batch:
        """Uniform with replacement over the filled slots."""
        if self.size < batch_size or batch_size < 1:
            raise ValueError(f"cannot sample {batch_size} transitions from a buffer holding {self.size}")
        idx = rng.integers(0, self.size, size=batch_size)
        return self.take(idx)

    def take(self, idx) -> Batch:
        return Batch(self.obs[idx], self.act[idx], self.rew[idx], self.next_obs[idx], self.done[idx])


class RunningNorm:
    """Per-feature running mean and variance (Chan et al. parallel update).

    Features with (near) zero variance pass through centred but unscaled.
    """

    def __init__(self, dim: int, clip: float = 10.0):
        self.dim = dim
        self.count = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros(dim)
        self.clip = clip
        self.frozen = False

    @property
    def var(self) -> np.ndarray:
        if self.count < 2:
            return np.ones(self.dim)
        return self.m2 / self.count

    @property
    def std(self) -> np.ndarray:
        s = np.sqrt(self.var)
        return np.where(s < 1e-6, 1.0, s)

    def update(self, x: np.ndarray) -> None:
        if self.frozen:
            return
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n = x.shape[0]
        if n == 0:
            return
        bmean = x.mean(axis=0)
        bm2 = ((x - bmean) ** 2).sum(axis=0)
        total = self.count + n
        delta = bmean - self.mean
        self.mean = self.mean + delta * (n / total)
        self.m2 = self.m2 + bm2 + delta ** 2 * (self.count * n / total)
        self.count = total

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.clip((np.asarray(x, dtype=float) - self.mean) / self.std, -self.clip, self.clip)

    def snapshot(self) -> "RunningNorm":
        out = RunningNorm(self.dim, self.clip)
        out.count, out.mean, out.m2 = self.count, self.mean.copy(), self.m2.copy()
        out.frozen = True
        return out
