"""Evaluation protocols: torque ablation, position scatter, torque-noise and mass sweeps, record/replay."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from torquegrasp.env.config import EpisodeConfig, episode_from_dict, grasp_from_dict
from torquegrasp.env.grasp_env import GraspEnv
from torquegrasp.errors import ConfigError, IntegrityError
from torquegrasp.harness.config import RunConfig, episode_config, make_env, seed_sequence
from torquegrasp.harness.evaluate import ROW_HEADER, EvalReport, evaluate
from torquegrasp.harness.io import JsonlWriter, TRAJECTORY_FORMAT, dumps, read_jsonl, write_csv
from torquegrasp.harness.train import TrainResult, train
from torquegrasp.learn.checkpoint import PolicyCheckpoint
from torquegrasp.sim.model import scene_from_dict, scene_to_dict

ABLATION_EPSILONS = ((-0.017, 0.01), (-0.007, 0.01), (0.015, 0.01))
NOISE_LEVELS = tuple(round(0.1 * i, 1) for i in range(11))
MASS_SCALES = (1.0, 0.2, 0.1)
LIGHT_MOVE_TOLERANCE = 0.03


# ---------------------------------------------------------------- trajectories

@dataclass
class Trajectory:
    epsilon: tuple[float, float]
    terminal: str
    palm: np.ndarray     # (steps + 1, 2), world frame, including the reset state
    object: np.ndarray   # (steps + 1, 3)
    torques_seen: np.ndarray  # (steps + 1, n_dof) F block as observed

    @property
    def steps(self) -> int:
        return len(self.palm) - 1


def _palm_world(env: GraspEnv) -> tuple[float, float]:
    return env.world.hand.base_pose.apply(env.scene.hand.palm_reference)


def rollout_trajectory(ckpt: PolicyCheckpoint, env: GraspEnv, epsilon, seed) -> Trajectory:
    palm, obj, seen = [], [], []
    F = env.layout["torques"]

    def grab(obs):
        palm.append(_palm_world(env))
        obj.append(env.world.object.pose.as_tuple())
        seen.append(np.array(obs[F]))

    obs = env.reset(seed, epsilon=epsilon)
    grab(obs)
    while True:
        out = env.step(ckpt.act(obs))
        obs = out.observation
        grab(obs)
        if out.terminal is not None:
            return Trajectory(tuple(epsilon), out.terminal.value, np.array(palm), np.array(obj),
                              np.array(seen))


def trajectory_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Mean Euclidean gap between two palm paths over their common prefix."""
    n = min(len(a), len(b))
    return float(np.mean(np.linalg.norm(a[:n] - b[:n], axis=1)))


def mean_pairwise_distance(paths: Sequence[np.ndarray]) -> float:
    pairs = list(itertools.combinations(range(len(paths)), 2))
    if not pairs:
        return 0.0
    return float(np.mean([trajectory_distance(paths[i], paths[j]) for i, j in pairs]))


def write_trajectories(path: Path, trajs: Sequence[Trajectory]) -> None:
    with JsonlWriter(path) as w:
        for k, t in enumerate(trajs):
            for s in range(len(t.palm)):
                w.write({"scenario": k, "eps_x": t.epsilon[0], "eps_y": t.epsilon[1], "step": s,
                         "palm_x": t.palm[s, 0], "palm_y": t.palm[s, 1],
                         "object_x": t.object[s, 0], "object_y": t.object[s, 1],
                         "torques": t.torques_seen[s], "terminal": t.terminal})


# ---------------------------------------------------------------- ablation

@dataclass
class AblationResult:
    with_feedback: TrainResult
    zero_torque: TrainResult
    heldout: dict[str, EvalReport]
    trajectories: dict[str, list[Trajectory]]

    @property
    def diversity(self) -> dict[str, float]:
        return {k: mean_pairwise_distance([t.palm for t in v]) for k, v in self.trajectories.items()}

    def summary(self) -> dict:
        wf, zt = self.with_feedback.final, self.zero_torque.final
        div = self.diversity
        return {
            "with_feedback_success": wf.success_rate,
            "zero_torque_success": zt.success_rate,
            "with_feedback_heldout_success": self.heldout["with_feedback"].success_rate,
            "zero_torque_heldout_success": self.heldout["zero_torque"].success_rate,
            "with_feedback_best_step": self.with_feedback.best_step,
            "zero_torque_best_step": self.zero_torque.best_step,
            "trajectory_diversity_with_feedback": div["with_feedback"],
            "trajectory_diversity_zero_torque": div["zero_torque"],
            "scenario_outcomes": {k: [t.terminal for t in v] for k, v in self.trajectories.items()},
        }


def ablation_trajectories(ckpt: PolicyCheckpoint, run: RunConfig, zero_torque: bool,
                          seed: int) -> list[Trajectory]:
    env = make_env(run, episode_config(run).with_(zero_torque=zero_torque))
    return [rollout_trajectory(ckpt, env, eps, seed_sequence(seed, 900 + k))
            for k, eps in enumerate(ABLATION_EPSILONS)]


def ablate_torque(run: RunConfig, out_dir: str | Path, heldout_episodes: int = 100,
                  trained: dict[str, TrainResult] | None = None) -> AblationResult:
    """Two trainings identical except for zero_torque, then paired evaluation and trajectories.

    Pass already-finished trainings in `trained` to skip retraining.
    """
    out = Path(out_dir)
    results = dict(trained or {})
    for name, zt in (("with_feedback", False), ("zero_torque", True)):
        if name not in results:
            results[name] = train(run.with_(zero_torque=zt), out / name)
    heldout, trajs = {}, {}
    heldout_seed = int(seed_sequence(run.seed, 77).generate_state(1, np.uint64)[0])
    for name, zt in (("with_feedback", False), ("zero_torque", True)):
        r = run.with_(zero_torque=zt)
        res = results[name]
        rep = evaluate(res.best, make_env(r), heldout_episodes, heldout_seed)
        heldout[name] = rep
        write_csv(out / f"{name}_heldout.csv", ROW_HEADER, rep.rows())
        trajs[name] = ablation_trajectories(res.best, run, zt, run.seed)
        write_trajectories(out / f"{name}_trajectories.jsonl", trajs[name])
    result = AblationResult(results["with_feedback"], results["zero_torque"], heldout, trajs)
    s = result.summary()
    write_csv(out / "ablation.csv", ("variant", "final_selection_success", "heldout_success",
                                     "best_step", "trajectory_diversity"),
              [(n, s[f"{n}_success"], s[f"{n}_heldout_success"], s[f"{n}_best_step"],
                s[f"trajectory_diversity_{n}"]) for n in ("with_feedback", "zero_torque")])
    (out / "ablation_summary.json").write_text(dumps(s) + "\n")
    return result


# ---------------------------------------------------------------- scatter and sweeps

def _ckpt_episode(ckpt: PolicyCheckpoint, run: RunConfig) -> EpisodeConfig:
    """The episode settings a checkpoint was trained with, else the run's."""
    ep = ckpt.meta.get("episode")
    return episode_from_dict(ep) if ep else episode_config(run)


def scatter(ckpt: PolicyCheckpoint, run: RunConfig, out_dir: str | Path, n: int = 100,
            seed: int | None = None) -> EvalReport:
    env = make_env(run, _ckpt_episode(ckpt, run))
    rep = evaluate(ckpt, env, n, run.seed if seed is None else seed)
    write_csv(Path(out_dir) / "scatter.csv", ("episode", "eps_x", "eps_y", "success", "terminal"),
              [(e.index, e.epsilon[0], e.epsilon[1], int(e.success), e.terminal) for e in rep.episodes])
    return rep


def noise_sweep(ckpt: PolicyCheckpoint, run: RunConfig, out_dir: str | Path,
                levels: Sequence[float] = NOISE_LEVELS, trials: int = 10,
                seed: int | None = None) -> list[tuple[float, EvalReport]]:
    """Same episode seeds at every level, so level 0 equals a plain evaluation."""
    base = _ckpt_episode(ckpt, run)
    seed = run.seed if seed is None else seed
    rows = []
    for a in levels:
        env = make_env(run, base.with_(torque_noise_amplitude=float(a)))
        rows.append((float(a), evaluate(ckpt, env, trials, seed)))
    write_csv(Path(out_dir) / "noise_sweep.csv",
              ("noise_fraction_of_tau_max", "trials", "successes", "success_rate", "mean_return"),
              [(a, r.n, r.successes, r.success_rate, r.mean_return) for a, r in rows])
    return rows


def mass_sweep(ckpt: PolicyCheckpoint, run: RunConfig, out_dir: str | Path,
               scales: Sequence[float] = MASS_SCALES, trials: int = 10,
               tolerance: float = LIGHT_MOVE_TOLERANCE,
               seed: int | None = None) -> list[tuple[float, EvalReport]]:
    """Scales are relative to the training mass; the move tolerance is relaxed for all of them."""
    base = _ckpt_episode(ckpt, run)
    seed = run.seed if seed is None else seed
    rows = []
    for s in scales:
        cfg = base.with_(mass_scale=base.mass_scale * s, move_tolerance_override=tolerance)
        rows.append((float(s), evaluate(ckpt, make_env(run, cfg), trials, seed)))
    write_csv(Path(out_dir) / "mass_sweep.csv",
              ("mass_scale_of_trained", "absolute_mass_scale", "move_tolerance", "trials",
               "successes", "success_rate", "mean_displacement"),
              [(s, base.mass_scale * s, tolerance, r.n, r.successes, r.success_rate,
                r.mean_displacement) for s, r in rows])
    return rows


# ---------------------------------------------------------------- record / replay

STATE_FIELDS = ("time", "base_pose", "q", "h", "h_cmd", "torques", "observed_torques", "object_pose",
                "r_a", "r_b", "r_c", "reward")


def _state_record(env: GraspEnv, obs) -> dict:
    w = env.world
    return {
        "time": w.time,
        "base_pose": w.hand.pos[:3].tolist(),
        "q": w.hand.pos[3:].tolist(),
        "h": env.h,
        "h_cmd": env.h_cmd,
        "torques": w.sensed_torques.tolist(),
        "observed_torques": np.asarray(obs[env.layout["torques"]]).tolist(),
        "object_pose": list(w.object.pose.as_tuple()),
    }


def record_episode(ckpt: PolicyCheckpoint, run: RunConfig, path: str | Path, seed: int,
                   index: int = 0, max_actions: int | None = None,
                   episode: EpisodeConfig | None = None) -> dict:
    """Runs one deterministic episode and writes a header line plus one line per step.

    max_actions=0 writes the header only.
    """
    cfg = episode or _ckpt_episode(ckpt, run)
    env = make_env(run, cfg)
    if not isinstance(env, GraspEnv):
        raise ConfigError("record/replay is defined for the grasp task only")
    obs = env.reset(seed_sequence(seed, index))
    header = {"kind": "header", "format_version": TRAJECTORY_FORMAT, "seed": seed, "index": index,
              "epsilon": list(env.epsilon), "scene": scene_to_dict(env.scene),
              "grasp": env.grasp.to_dict(), "episode": cfg.to_dict(),
              "initial": _state_record(env, obs)}
    steps = 0
    terminal = None
    with JsonlWriter(path) as w:
        w.write(header)
        while max_actions is None or steps < max_actions:
            action = ckpt.act(obs)
            out = env.step(action)
            steps += 1
            obs = out.observation
            rec = {"kind": "step", "step": steps, "action": action.tolist()}
            rec.update(_state_record(env, obs))
            rec.update({k: out.info.get(k) for k in ("r_a", "r_b", "r_c")})
            rec["reward"] = out.reward
            rec["terminal"] = out.terminal.value if out.terminal else None
            w.write(rec)
            if out.terminal is not None:
                terminal = out.terminal.value
                break
    return {"steps": steps, "terminal": terminal, "epsilon": list(env.epsilon)}


def _same(a, b) -> bool:
    # JSON round-trips floats exactly, so == is a bitwise comparison here
    if isinstance(a, list):
        return isinstance(b, list) and len(a) == len(b) and all(_same(x, y) for x, y in zip(a, b))
    if isinstance(a, float) and isinstance(b, float) and math.isnan(a):
        return math.isnan(b)
    return a == b


def replay(path: str | Path) -> dict:
    """Re-steps the simulator from the logged actions; any mismatch raises IntegrityError."""
    lines = read_jsonl(path)
    if not lines or lines[0].get("kind") != "header":
        raise IntegrityError(f"{path}: missing trajectory header")
    header = lines[0]
    if header.get("format_version") != TRAJECTORY_FORMAT:
        raise IntegrityError(f"{path}: unsupported trajectory format {header.get('format_version')!r}")
    scene = scene_from_dict(header["scene"])
    grasp = grasp_from_dict(header["grasp"], scene.hand)
    env = GraspEnv(scene, grasp, episode_from_dict(header["episode"]))
    obs = env.reset(seed_sequence(header["seed"], header["index"]))
    if not _same(list(env.epsilon), header["epsilon"]):
        raise IntegrityError("replay: object offset differs from the recording")
    if not _same(json.loads(dumps(_state_record(env, obs))), header["initial"]):
        raise IntegrityError("replay: initial state differs from the recording")
    terminal = None
    for rec in lines[1:]:
        out = env.step(np.array(rec["action"], dtype=float))
        got = _state_record(env, out.observation)
        got.update({k: out.info.get(k) for k in ("r_a", "r_b", "r_c")})
        got["reward"] = out.reward
        got = json.loads(dumps(got))
        for k in STATE_FIELDS:
            if not _same(got[k], rec[k]):
                raise IntegrityError(f"replay diverged at step {rec['step']} in {k!r}")
        terminal = out.terminal.value if out.terminal else None
        if terminal != rec["terminal"]:
            raise IntegrityError(f"replay terminal differs at step {rec['step']}")
    return {"steps": len(lines) - 1, "terminal": terminal}
