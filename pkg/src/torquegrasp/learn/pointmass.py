"""A 2-D point-mass reach task used to sanity-check the learner on its own."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from torquegrasp.env.grasp_env import StepOutcome
from torquegrasp.env.rewards import Terminal
from torquegrasp.errors import ConfigError


@dataclass(frozen=True)
class PointMassConfig:
    arena: float = 1.0
    goal_range: float = 0.8
    step_size: float = 0.1
    goal_radius: float = 0.05
    max_steps: int = 50
    success_bonus: float = 10.0


class PointMassEnv:
    """Observation (x, y, goal_x, goal_y); action is a velocity in [-1, 1]^2."""

    obs_dim = 4
    action_dim = 2

    def __init__(self, cfg: PointMassConfig | None = None):
        self.cfg = cfg or PointMassConfig()
        self.pos = np.zeros(2)
        self.goal = np.zeros(2)
        self.step_index = 0
        self.terminal: Terminal | None = None
        self.epsilon = (0.0, 0.0)

    def _obs(self) -> np.ndarray:
        return np.concatenate([self.pos, self.goal])

    def reset(self, seed=None, epsilon=None) -> np.ndarray:
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        rng = np.random.default_rng(ss)
        c = self.cfg
        self.pos = rng.uniform(-c.arena, c.arena, size=2)
        self.goal = rng.uniform(-c.goal_range, c.goal_range, size=2)
        self.epsilon = (float(self.goal[0]), float(self.goal[1]))
        self.step_index = 0
        self.episode_return = 0.0
        self.terminal = None
        return self._obs()

    def step(self, action) -> StepOutcome:
        a = np.clip(np.asarray(action, dtype=float), -1.0, 1.0)
        if a.shape != (2,):
            raise ConfigError(f"expected action of shape (2,), got {a.shape}")
        c = self.cfg
        self.pos = np.clip(self.pos + c.step_size * a, -c.arena, c.arena)
        self.step_index += 1
        dist = float(np.linalg.norm(self.pos - self.goal))
        reward = -dist
        terminal = None
        if dist < c.goal_radius:
            terminal, reward = Terminal.SUCCESS, reward + c.success_bonus
        elif self.step_index >= c.max_steps:
            terminal = Terminal.TIMEOUT
        self.terminal = terminal
        self.episode_return += reward
        return StepOutcome(self._obs(), reward, terminal,
                           {"step": self.step_index, "distance": dist,
                            "episode_return": self.episode_return, "displacement": 0.0})
