"""Grasp-approach MDP over the planar simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from torquegrasp.env.config import SYNCHRONIZED, EpisodeConfig, GraspSpec
from torquegrasp.env.rewards import (
    Terminal,
    check_terminal,
    compute_h,
    interp_joints,
    progress,
    reward_components,
    total_reward,
)
from torquegrasp.errors import ConfigError, SimulationDiverged
from torquegrasp.sim.dynamics import Simulator
from torquegrasp.sim.geometry import Pose2, WorldPolygon, capsule_polygon_query
from torquegrasp.sim.kinematics import _fk_raw
from torquegrasp.sim.model import Scene, WorldState

PREGRASP_CLEARANCE = 0.02

OBSERVATION_BLOCKS = (
    "torques", "finger_joints", "base_pose", "h", "base_targets",
    "prev_base_pose", "prev_h", "goal_base_pose", "goal_palm",
)


@dataclass
class StepOutcome:
    observation: np.ndarray
    reward: float
    terminal: Terminal | None
    info: dict[str, Any] = field(default_factory=dict)

    @property
    def done(self) -> bool:
        """True when the episode ended for a reason other than the step limit."""
        return self.terminal is not None and self.terminal is not Terminal.TIMEOUT


def surface_clearance(scene: Scene, obj_pose: Pose2, base: Pose2, q: Sequence[float]) -> float:
    """Smallest gap between any hand capsule surface and the object (negative if overlapping)."""
    poly = WorldPolygon(scene.object.shape, obj_pose)
    segs, _, _ = _fk_raw(scene.hand, base.x, base.y, base.theta, list(q))
    probe = poly.bound + 10.0
    best = math.inf
    for ax, ay, bx, by, r, _ in segs:
        # a probe radius far above any gap turns the query into a distance
        depth, *_ = capsule_polygon_query(ax, ay, bx, by, probe, poly)
        best = min(best, probe - depth - r)
    return best


def observation_layout(n_dof: int, n_joints: int) -> dict[str, slice]:
    sizes = dict(zip(OBSERVATION_BLOCKS, (n_dof, n_joints, 3, 1, 3, 3, 1, 3, 2)))
    out, start = {}, 0
    for name in OBSERVATION_BLOCKS:
        out[name] = slice(start, start + sizes[name])
        start += sizes[name]
    return out


def build_observation(world: WorldState, h: float, prev_base: Sequence[float], prev_h: float,
                      goal_base: Sequence[float], goal_palm: Sequence[float],
                      torque_caps: np.ndarray, cfg: EpisodeConfig,
                      rng: np.random.Generator | None) -> np.ndarray:
    """Assemble the observation vector; object state never enters it."""
    torques = np.array(world.sensed_torques, dtype=float)
    if cfg.zero_torque:
        torques = np.zeros_like(torques)
    elif cfg.torque_noise_amplitude > 0.0:
        a = cfg.torque_noise_amplitude
        torques = torques + rng.uniform(-a, a, size=torques.shape) * torque_caps
    pos = world.hand.pos
    obs = np.concatenate([
        torques, pos[3:], pos[:3], [h], world.hand.targets[:3],
        np.asarray(prev_base, dtype=float), [prev_h],
        np.asarray(goal_base, dtype=float), np.asarray(goal_palm, dtype=float),
    ])
    return obs


class GraspEnv:
    """reset(seed) / step(action) over one scene and grasp.

    The object's initial position is perturbed by an unobserved offset drawn
    uniformly per horizontal axis; the hand starts at the pre-grasp computed
    from the nominal (unperturbed) object pose.
    """

    def __init__(self, scene: Scene, grasp: GraspSpec, cfg: EpisodeConfig | None = None):
        self.scene = scene
        self.grasp = grasp
        self.cfg = cfg or EpisodeConfig()
        hand = scene.hand
        grasp.validate(hand)
        self.sim = Simulator(hand, scene.sim)
        self.nominal = scene.object.pose
        self.pre_base = self.nominal.compose(grasp.pre_base)
        self.goal_base_nominal = self.nominal.compose(grasp.goal_base)
        self.goal_palm_nominal = self.nominal.apply(grasp.goal_palm)
        self.j0 = np.array(grasp.pre_joints)
        self.jg = np.array(grasp.goal_joints)
        self.joint_limits = hand.joint_limits
        self.torque_caps = np.array([scene.sim.tau_max[g] for g in hand.dof_groups])
        clearance = surface_clearance(scene, self.nominal, self.pre_base, grasp.pre_joints)
        if clearance < PREGRASP_CLEARANCE:
            raise ConfigError(
                f"pre-grasp clearance {clearance:.4f} m is below {PREGRASP_CLEARANCE} m")
        self.layout = observation_layout(hand.n_dof, hand.n_joints)
        self.obs_dim = self.layout["goal_palm"].stop
        self.action_dim = 4 if self.cfg.action_mode == SYNCHRONIZED else hand.n_dof
        self.world: WorldState | None = None
        self.epsilon = (0.0, 0.0)

    # ------------------------------------------------------------ episode

    def reset(self, seed=None, epsilon: Sequence[float] | None = None) -> np.ndarray:
        """Start an episode. An explicit epsilon overrides the seeded draw."""
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        eps_ss, noise_ss = ss.spawn(2)
        r = self.cfg.epsilon_range
        drawn = np.random.default_rng(eps_ss).uniform(-r, r, size=2)
        if epsilon is not None:
            drawn = np.asarray(epsilon, dtype=float)
        self.epsilon = (float(drawn[0]), float(drawn[1]))
        self.noise_rng = np.random.default_rng(noise_ss)
        base_obj = self.scene.object
        start = Pose2(self.nominal.x + self.epsilon[0], self.nominal.y + self.epsilon[1],
                      self.nominal.theta)
        obj = replace(base_obj, pose=start, velocity=(0.0, 0.0, 0.0),
                      mass=base_obj.mass * self.cfg.mass_scale,
                      inertia=base_obj.inertia * self.cfg.mass_scale)
        self.start_xy = (start.x, start.y)
        self.world = self.sim.initial_world(obj, self.pre_base, self.j0)
        self.h_cmd = 0.0
        self.step_index = 0
        self.episode_return = 0.0
        self.terminal: Terminal | None = None
        h = compute_h(self.world.hand.q, self.jg, self.joint_limits)
        self.h = h
        self.prev_base = self.world.hand.pos[:3].copy()
        self.prev_h = h
        self.last_obs = self._observe(h)
        return self.last_obs

    def _observe(self, h: float) -> np.ndarray:
        obs = build_observation(self.world, h, self.prev_base, self.prev_h,
                                self.goal_base_nominal.as_tuple(), self.goal_palm_nominal,
                                self.torque_caps, self.cfg, self.noise_rng)
        if not np.all(np.isfinite(obs)):
            raise SimulationDiverged("non-finite observation")
        return obs

    def apply_action(self, action: Sequence[float]) -> np.ndarray:
        """PD targets after one action; updates the commanded progress h_cmd."""
        a = np.clip(np.asarray(action, dtype=float), -1.0, 1.0)
        if a.shape != (self.action_dim,):
            raise ConfigError(f"expected action of shape ({self.action_dim},), got {a.shape}")
        cfg = self.cfg
        hand = self.scene.hand
        targets = self.world.hand.targets.copy()
        step = np.asarray(cfg.base_step)
        if cfg.action_mode == SYNCHRONIZED:
            self.h_cmd = min(max(self.h_cmd + a[0] * cfg.h_step, 0.0), 1.0)
            targets[3:] = interp_joints(self.j0, self.jg, self.h_cmd)
            targets[:3] = targets[:3] + a[1:] * step
        else:
            targets[:3] = targets[:3] + a[:3] * step
            targets[3:] = targets[3:] + a[3:] * cfg.finger_step
        lims = np.array(hand.dof_limits)
        if cfg.action_mode == SYNCHRONIZED:
            targets[:3] = np.clip(targets[:3], lims[:3, 0], lims[:3, 1])
        else:
            targets = np.clip(targets, lims[:, 0], lims[:, 1])
        return targets

    def palm_in_object(self, world: WorldState | None = None) -> tuple[float, float]:
        world = world or self.world
        base = world.hand.base_pose
        palm = base.apply(self.scene.hand.palm_reference)
        return world.object.pose.apply_inverse(palm)

    def step(self, action: Sequence[float]) -> StepOutcome:
        if self.world is None or self.terminal is not None:
            raise RuntimeError("step() called on a finished or unreset episode")
        targets = self.apply_action(action)
        self.step_index += 1
        try:
            self.world = self.sim.step(self.world, targets)
            h = compute_h(self.world.hand.q, self.jg, self.joint_limits)
            obs = self._observe(h)
        except SimulationDiverged:
            self.terminal = Terminal.SIM_DIVERGED
            return StepOutcome(self.last_obs, 0.0, Terminal.SIM_DIVERGED,
                               {"step": self.step_index})
        obj = self.world.object.pose
        r_a, r_b, r_c = reward_components(h, self.palm_in_object(), self.grasp.goal_palm,
                                          (obj.x, obj.y), self.start_xy)
        reward = total_reward(r_a, r_b, r_c, self.cfg)
        self.episode_return += reward
        terminal, bonus = check_terminal(r_a, r_b, r_c, self.step_index, self.episode_return, self.cfg)
        reward += bonus
        self.episode_return += bonus
        self.terminal = terminal
        info = {
            "r_a": r_a, "r_b": r_b, "r_c": r_c, "h": h,
            "progress": progress(self.world.hand.q, self.j0, self.jg, self.joint_limits),
            "h_cmd": self.h_cmd, "displacement": -r_c, "step": self.step_index,
            "episode_return": self.episode_return,
        }
        self.prev_base = self.world.hand.pos[:3].copy()
        self.prev_h = h
        self.h = h
        self.last_obs = obs
        return StepOutcome(obs, reward, terminal, info)
