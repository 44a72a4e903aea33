"""Grasp specification and episode configuration."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping

from torquegrasp.errors import ConfigError
from torquegrasp.sim.geometry import Pose2
from torquegrasp.sim.model import HandSpec, _pair, _triple, strict_keys

SYNCHRONIZED = "synchronized"
INDEPENDENT = "independent"


@dataclass(frozen=True)
class GraspSpec:
    """Pre-grasp relative to the nominal object pose, goal relative to the object."""

    pre_base: Pose2
    pre_joints: tuple[float, ...]
    goal_base: Pose2
    goal_joints: tuple[float, ...]
    goal_palm: tuple[float, float]

    def validate(self, hand: HandSpec) -> None:
        n = hand.n_joints
        if len(self.pre_joints) != n or len(self.goal_joints) != n:
            raise ConfigError(f"grasp joint vectors must have {n} entries")
        for i, ((lo, hi), j0, jg) in enumerate(zip(hand.joint_limits, self.pre_joints, self.goal_joints)):
            if not (lo <= j0 <= hi and lo <= jg <= hi):
                raise ConfigError(f"grasp joint {i} outside limits [{lo}, {hi}]")

    def to_dict(self) -> dict:
        return {
            "pre_grasp": {"base": list(self.pre_base.as_tuple()), "joints": list(self.pre_joints)},
            "goal_grasp": {"base": list(self.goal_base.as_tuple()), "joints": list(self.goal_joints)},
            "goal_palm": list(self.goal_palm),
        }


def grasp_from_dict(d: Mapping[str, Any], hand: HandSpec | None = None) -> GraspSpec:
    strict_keys(d, "grasp", ["pre_grasp", "goal_grasp", "goal_palm"], ["joint_limits"])
    pre, goal = d["pre_grasp"], d["goal_grasp"]
    strict_keys(pre, "grasp.pre_grasp", ["base", "joints"])
    strict_keys(goal, "grasp.goal_grasp", ["base", "joints"])
    spec = GraspSpec(
        pre_base=Pose2(*_triple(pre["base"], "grasp.pre_grasp.base")),
        pre_joints=tuple(float(v) for v in pre["joints"]),
        goal_base=Pose2(*_triple(goal["base"], "grasp.goal_grasp.base")),
        goal_joints=tuple(float(v) for v in goal["joints"]),
        goal_palm=_pair(d["goal_palm"], "grasp.goal_palm"),
    )
    if hand is not None:
        if "joint_limits" in d:
            ref = [_pair(v, "grasp.joint_limits") for v in d["joint_limits"]]
            if ref != list(hand.joint_limits):
                raise ConfigError("grasp.joint_limits does not match the scene's hand")
        spec.validate(hand)
    return spec


@dataclass(frozen=True)
class EpisodeConfig:
    epsilon_range: float = 0.02
    move_fail_threshold: float = 0.01
    palm_fail_threshold: float = 0.1
    success_r_a: float = 0.05
    success_r_b: float = 0.01
    success_r_c: float = 0.01
    max_steps: int = 200
    abort_return: float = -50.0
    success_bonus: float = 1000.0
    step_bonus: float = 1.5
    w: float = 1.5
    w_a: float = 1.0
    w_b: float = 20.0
    w_c: float = 100.0
    action_mode: str = SYNCHRONIZED
    h_step: float = 0.05
    base_step: tuple[float, float, float] = (0.002, 0.002, 0.01)
    finger_step: float = 0.05
    zero_torque: bool = False
    torque_noise_amplitude: float = 0.0
    mass_scale: float = 1.0
    move_tolerance_override: float | None = None

    def __post_init__(self) -> None:
        positive = ("epsilon_range", "move_fail_threshold", "palm_fail_threshold", "success_r_a",
                    "success_r_b", "success_r_c", "h_step", "finger_step", "mass_scale")
        for name in positive:
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"episode.{name} must be > 0")
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise ConfigError("episode.max_steps must be an integer >= 1")
        if self.action_mode not in (SYNCHRONIZED, INDEPENDENT):
            raise ConfigError(f"episode.action_mode must be {SYNCHRONIZED!r} or {INDEPENDENT!r}")
        if len(self.base_step) != 3 or not all(s > 0.0 for s in self.base_step):
            raise ConfigError("episode.base_step must be three positive numbers")
        if self.torque_noise_amplitude < 0.0:
            raise ConfigError("episode.torque_noise_amplitude must be >= 0")
        if self.move_tolerance_override is not None and not self.move_tolerance_override > 0.0:
            raise ConfigError("episode.move_tolerance_override must be > 0")

    @property
    def move_threshold(self) -> float:
        """Displacement limit used for both the failure test and the success tolerance."""
        if self.move_tolerance_override is not None:
            return self.move_tolerance_override
        return self.move_fail_threshold

    @property
    def success_displacement(self) -> float:
        if self.move_tolerance_override is not None:
            return self.move_tolerance_override
        return self.success_r_c

    def with_(self, **changes) -> "EpisodeConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["base_step"] = list(self.base_step)
        return d


def episode_from_dict(d: Mapping[str, Any]) -> EpisodeConfig:
    names = [f.name for f in fields(EpisodeConfig)]
    strict_keys(d, "episode", [], names)
    kwargs = dict(d)
    if "base_step" in kwargs:
        kwargs["base_step"] = _triple(kwargs["base_step"], "episode.base_step")
    if "max_steps" in kwargs:
        kwargs["max_steps"] = int(kwargs["max_steps"])
    return EpisodeConfig(**kwargs)


def _read_json(path: str | Path, what: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{what} file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} file {path} is not valid JSON: {exc}") from None


def load_grasp(path: str | Path | None, hand: HandSpec | None = None) -> GraspSpec:
    if path is None:
        from torquegrasp.data import read_default
        return grasp_from_dict(read_default("grasp"), hand)
    return grasp_from_dict(_read_json(path, "grasp"), hand)


def load_episode(path: str | Path | None) -> EpisodeConfig:
    if path is None:
        return EpisodeConfig()
    return episode_from_dict(_read_json(path, "episode"))
