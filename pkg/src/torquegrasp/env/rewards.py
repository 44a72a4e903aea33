"""Finger trajectory, progress variable, shaped reward and terminal logic."""

from __future__ import annotations

import enum
import logging
import math
from typing import Sequence

import numpy as np

from torquegrasp.env.config import EpisodeConfig
from torquegrasp.errors import ConfigError

log = logging.getLogger(__name__)


class Terminal(str, enum.Enum):
    SUCCESS = "success"
    FAIL_OBJECT_MOVED = "fail_object_moved"
    FAIL_PALM_DEVIATION = "fail_palm_deviation"
    FAIL_LOW_RETURN = "fail_low_return"
    TIMEOUT = "timeout"
    SIM_DIVERGED = "sim_diverged"

    @property
    def is_failure(self) -> bool:
        return self not in (Terminal.SUCCESS, Terminal.TIMEOUT)


def interp_joints(j0: Sequence[float], jg: Sequence[float], h: float) -> np.ndarray:
    """Joint angles a fraction h of the way from j0 to jg."""
    if not 0.0 <= h <= 1.0:
        log.debug("interp_joints: clamping h=%r into [0, 1]", h)
        h = min(max(h, 0.0), 1.0)
    j0 = np.asarray(j0, dtype=float)
    jg = np.asarray(jg, dtype=float)
    # written as a blend so both endpoints are reproduced exactly
    return (1.0 - h) * j0 + h * jg


def _normalized_gap(j: Sequence[float], jg: Sequence[float],
                    limits: Sequence[Sequence[float]]) -> float:
    if not (len(j) == len(jg) == len(limits)):
        raise ConfigError("joint, goal and limit vectors differ in length")
    worst = 0.0
    for ji, gi, (lo, hi) in zip(j, jg, limits):
        span = hi - lo
        if not span > 0.0:
            raise ConfigError(f"zero-width joint limit [{lo}, {hi}]")
        gap = abs((ji - lo) / span - (gi - lo) / span)
        if gap > worst:
            worst = gap
    return worst


def compute_h(j: Sequence[float], jg: Sequence[float], limits: Sequence[Sequence[float]]) -> float:
    """h = 1 - 0.5 * max_i |normalized j_i - normalized goal_i|.

    Taken literally this lies in [0.5, 1]; see progress() for a [0, 1] measure.
    """
    return 1.0 - 0.5 * _normalized_gap(j, jg, limits)


def progress(j: Sequence[float], j0: Sequence[float], jg: Sequence[float],
             limits: Sequence[Sequence[float]]) -> float:
    """Diagnostic only: 0 at the pre-grasp joints, 1 at the goal joints."""
    start = _normalized_gap(j0, jg, limits)
    if start == 0.0:
        return 1.0
    return 1.0 - _normalized_gap(j, jg, limits) / start


def reward_components(h: float, palm_obj: Sequence[float], goal_palm: Sequence[float],
                      obj_xy: Sequence[float], start_xy: Sequence[float]) -> tuple[float, float, float]:
    """(r_a, r_b, r_c): joint progress, palm offset in the object frame, object drift."""
    r_a = -abs(1.0 - h)
    r_b = -math.hypot(palm_obj[0] - goal_palm[0], palm_obj[1] - goal_palm[1])
    r_c = -math.hypot(obj_xy[0] - start_xy[0], obj_xy[1] - start_xy[1])
    return r_a, r_b, r_c


def total_reward(r_a: float, r_b: float, r_c: float, cfg: EpisodeConfig) -> float:
    return cfg.w + cfg.w_a * r_a + cfg.w_b * r_b + cfg.w_c * r_c


def check_terminal(r_a: float, r_b: float, r_c: float, step: int, episode_return: float,
                   cfg: EpisodeConfig) -> tuple[Terminal | None, float]:
    """Terminal reason (or None) and the bonus to add to this step's reward.

    step is the 1-based index of the control step just taken; episode_return
    already includes this step's shaped reward.
    """
    displacement = -r_c
    palm_dev = -r_b
    if (abs(r_c) < cfg.success_displacement and abs(r_a) < cfg.success_r_a
            and abs(r_b) < cfg.success_r_b):
        return Terminal.SUCCESS, cfg.success_bonus + cfg.step_bonus * (cfg.max_steps - step)
    if displacement > cfg.move_threshold:
        return Terminal.FAIL_OBJECT_MOVED, 0.0
    if palm_dev > cfg.palm_fail_threshold:
        return Terminal.FAIL_PALM_DEVIATION, 0.0
    if episode_return < cfg.abort_return:
        return Terminal.FAIL_LOW_RETURN, 0.0
    if step >= cfg.max_steps:
        return Terminal.TIMEOUT, 0.0
    return None, 0.0
