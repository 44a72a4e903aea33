"""Deterministic policy evaluation over seeded episodes."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from torquegrasp.env.rewards import Terminal
from torquegrasp.harness.config import seed_sequence


@dataclass(frozen=True)
class EpisodeResult:
    index: int
    epsilon: tuple[float, float]
    terminal: str
    episode_return: float
    length: int
    displacement: float

    @property
    def success(self) -> bool:
        return self.terminal == Terminal.SUCCESS.value


@dataclass
class EvalReport:
    episodes: list[EpisodeResult] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.episodes)

    @property
    def successes(self) -> int:
        return sum(e.success for e in self.episodes)

    @property
    def defined(self) -> bool:
        return self.n > 0

    @property
    def success_rate(self) -> float:
        """successes / episodes; NaN (undefined) for an empty report."""
        return self.successes / self.n if self.n else math.nan

    def _mean(self, attr: str) -> float:
        return float(np.mean([getattr(e, attr) for e in self.episodes])) if self.n else math.nan

    @property
    def mean_return(self) -> float:
        return self._mean("episode_return")

    @property
    def mean_displacement(self) -> float:
        return self._mean("displacement")

    @property
    def mean_length(self) -> float:
        return self._mean("length")

    def summary(self) -> dict:
        return {"episodes": self.n, "success_rate": self.success_rate,
                "mean_return": self.mean_return, "mean_displacement": self.mean_displacement,
                "mean_length": self.mean_length, "success_rate_defined": self.defined}

    def rows(self) -> list[tuple]:
        return [(e.index, e.epsilon[0], e.epsilon[1], e.terminal, e.episode_return, e.length,
                 e.displacement) for e in self.episodes]


ROW_HEADER = ("episode", "eps_x", "eps_y", "terminal", "return", "length", "displacement")


def run_episode(env, act: Callable[[np.ndarray], np.ndarray], seed, epsilon=None,
                index: int = 0, on_step: Callable | None = None) -> EpisodeResult:
    obs = env.reset(seed, epsilon=epsilon)
    ret = 0.0
    disp = 0.0
    while True:
        action = act(obs)
        out = env.step(action)
        ret += out.reward
        disp = out.info.get("displacement", disp)
        if on_step is not None:
            on_step(env, obs, action, out)
        obs = out.observation
        if out.terminal is not None:
            return EpisodeResult(index, tuple(env.epsilon), out.terminal.value, ret,
                                 out.info.get("step", 0), disp)


def _worker(args):
    env_factory, ckpt_bytes, seed, idxs, eps_list = args
    from torquegrasp.learn.checkpoint import checkpoint_from_bytes
    env = env_factory()
    ckpt = checkpoint_from_bytes(ckpt_bytes)
    return [run_episode(env, ckpt.act, seed_sequence(seed, i), eps, i)
            for i, eps in zip(idxs, eps_list)]


def evaluate(checkpoint, env, n: int, seed: int, epsilons: Sequence | None = None,
             workers: int = 1, env_factory: Callable | None = None) -> EvalReport:
    """n episodes with the deterministic (mean) action; episode i uses stream (seed, i).

    With workers > 1 episodes run in separate processes (env_factory must be
    picklable); results are merged in episode-index order either way.
    """
    from torquegrasp.errors import ConfigError
    if checkpoint.obs_dim != env.obs_dim or checkpoint.act_dim != env.action_dim:
        raise ConfigError(
            f"checkpoint dims ({checkpoint.obs_dim}, {checkpoint.act_dim}) do not match the "
            f"environment ({env.obs_dim}, {env.action_dim})")
    eps_list = list(epsilons) if epsilons is not None else [None] * n
    if len(eps_list) != n:
        raise ConfigError("one epsilon per episode is required")
    if workers <= 1 or n < 2 or env_factory is None:
        return EvalReport([run_episode(env, checkpoint.act, seed_sequence(seed, i), eps_list[i], i)
                           for i in range(n)])
    data = checkpoint.to_bytes()
    chunks = [list(range(w, n, workers)) for w in range(workers)]
    jobs = [(env_factory, data, seed, idx, [eps_list[i] for i in idx]) for idx in chunks if idx]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = [r for part in pool.map(_worker, jobs) for r in part]
    return EvalReport(sorted(results, key=lambda e: e.index))
