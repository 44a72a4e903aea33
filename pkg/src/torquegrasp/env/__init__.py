"""Grasp-approach MDP: observations, shaped reward, terminal conditions."""

from torquegrasp.env.config import (
    INDEPENDENT,
    SYNCHRONIZED,
    EpisodeConfig,
    GraspSpec,
    episode_from_dict,
    grasp_from_dict,
    load_episode,
    load_grasp,
)
from torquegrasp.env.grasp_env import GraspEnv, StepOutcome, build_observation, observation_layout
from torquegrasp.env.rewards import (
    Terminal,
    check_terminal,
    compute_h,
    interp_joints,
    progress,
    reward_components,
    total_reward,
)

__all__ = [
    "INDEPENDENT", "SYNCHRONIZED", "EpisodeConfig", "GraspEnv", "GraspSpec", "StepOutcome",
    "Terminal", "build_observation", "check_terminal", "compute_h", "episode_from_dict",
    "grasp_from_dict", "interp_joints", "load_episode", "load_grasp", "observation_layout",
    "progress", "reward_components", "total_reward",
]
