"""Run configuration, presets and environment construction."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from torquegrasp.env.config import EpisodeConfig, episode_from_dict, load_episode, load_grasp
from torquegrasp.env.grasp_env import GraspEnv
from torquegrasp.errors import ConfigError
from torquegrasp.learn.pointmass import PointMassEnv
from torquegrasp.learn.sac import SacConfig, sac_from_dict
from torquegrasp.sim.model import load_scene, scene_to_dict

TASK_GRASP = "grasp"
TASK_POINTMASS = "pointmass"


@dataclass(frozen=True)
class RunConfig:
    total_steps: int = 1_000_000
    warmup_random_steps: int = 1000
    eval_every: int = 2000
    eval_episodes: int = 10
    top_k: int = 5
    final_selection_tests: int = 100
    seed: int = 0
    n_seeds: int = 1
    scene: str | None = None
    grasp: str | None = None
    episode: str | None = None
    train_mass_scale: float = 5.0
    zero_torque: bool = False
    task: str = TASK_GRASP
    sac: SacConfig = field(default_factory=SacConfig)

    def __post_init__(self):
        # warmup == total is allowed: it trains nothing and keeps the initial policy
        if not 0 <= self.warmup_random_steps <= self.total_steps:
            raise ConfigError("run.warmup_random_steps must not exceed run.total_steps")
        if self.eval_every <= 0:
            raise ConfigError("run.eval_every must be > 0")
        if self.top_k < 1:
            raise ConfigError("run.top_k must be >= 1")
        if self.eval_episodes < 1 or self.final_selection_tests < 1:
            raise ConfigError("run.eval_episodes and run.final_selection_tests must be >= 1")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigError("run.seed must be an unsigned 64-bit integer")
        if self.n_seeds < 1:
            raise ConfigError("run.n_seeds must be >= 1")
        if not self.train_mass_scale > 0.0:
            raise ConfigError("run.train_mass_scale must be > 0")
        if self.task not in (TASK_GRASP, TASK_POINTMASS):
            raise ConfigError(f"run.task must be {TASK_GRASP!r} or {TASK_POINTMASS!r}")

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sac"] = self.sac.to_dict()
        return d


PRESETS: dict[str, dict[str, Any]] = {
    "paper": {"total_steps": 1_000_000},
    "desk": {"total_steps": 200_000},
    # the learner sanity task; not the grasping schedule
    "pointmass": {"total_steps": 100_000, "task": TASK_POINTMASS, "eval_episodes": 20,
                  "final_selection_tests": 100, "eval_every": 5000},
}


def run_from_dict(d: Mapping[str, Any], base: RunConfig | None = None) -> RunConfig:
    names = {f.name for f in fields(RunConfig)}
    unknown = set(d) - names
    if unknown:
        raise ConfigError(f"run: unknown keys {sorted(unknown)}")
    kw = dict(d)
    base = base or RunConfig()
    if "sac" in kw:
        merged = base.sac.to_dict()
        merged.update(kw["sac"])
        kw["sac"] = sac_from_dict(merged)
    try:
        return replace(base, **kw)
    except TypeError as exc:
        raise ConfigError(f"run: {exc}") from None


def preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return run_from_dict(PRESETS[name])


def load_run(path: str | Path | None, base: RunConfig | None = None) -> RunConfig:
    if path is None:
        return base or RunConfig()
    try:
        with open(path) as fh:
            d = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"run file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"run file {path} is not valid JSON: {exc}") from None
    return run_from_dict(d, base)


def episode_config(run: RunConfig) -> EpisodeConfig:
    """Episode settings used for training: the file (or defaults) plus the run's overrides."""
    return load_episode(run.episode).with_(mass_scale=run.train_mass_scale,
                                           zero_torque=run.zero_torque)


def make_env(run: RunConfig, episode: EpisodeConfig | None = None):
    if run.task == TASK_POINTMASS:
        return PointMassEnv()
    scene = load_scene(run.scene)
    grasp = load_grasp(run.grasp, scene.hand)
    return GraspEnv(scene, grasp, episode or episode_config(run))


def resolved_config(run: RunConfig) -> dict:
    """Everything a run depends on, with packaged defaults expanded."""
    out = {"run": run.to_dict()}
    if run.task == TASK_GRASP:
        scene = load_scene(run.scene)
        out["scene"] = scene_to_dict(scene)
        out["grasp"] = load_grasp(run.grasp, scene.hand).to_dict()
        out["episode"] = episode_config(run).to_dict()
    return out


def episode_from_meta(meta: Mapping[str, Any]) -> EpisodeConfig | None:
    if "episode" not in meta:
        return None
    return episode_from_dict(meta["episode"])


def seed_sequence(root: int, *key: int) -> np.random.SeedSequence:
    """Independent stream for (root seed, purpose, index, ...)."""
    return np.random.SeedSequence(int(root), spawn_key=tuple(int(k) for k in key))


# stream purposes
STREAM_INIT = 0
STREAM_ACT = 1
STREAM_TRAIN_EPISODE = 2
STREAM_UPDATE = 3
STREAM_INTERIM_EVAL = 4
STREAM_FINAL_EVAL = 5
