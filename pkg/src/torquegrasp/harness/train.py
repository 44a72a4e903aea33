"""Training schedule: random warmup, one SAC update per step, periodic evaluation, top-k selection."""

from __future__ import annotations

import json
import logging
import math
import shutil
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from torquegrasp.harness.config import (
    STREAM_ACT,
    STREAM_FINAL_EVAL,
    STREAM_INIT,
    STREAM_INTERIM_EVAL,
    STREAM_TRAIN_EPISODE,
    STREAM_UPDATE,
    RunConfig,
    episode_config,
    make_env,
    resolved_config,
    seed_sequence,
)
from torquegrasp.harness.evaluate import EvalReport, evaluate
from torquegrasp.errors import ConfigError, IntegrityError
from torquegrasp.harness.io import MANIFEST_NAME, JsonlWriter, dumps, read_jsonl, write_manifest
from torquegrasp.learn.buffer import ReplayBuffer
from torquegrasp.learn.checkpoint import PolicyCheckpoint, load_checkpoint
from torquegrasp.learn.sac import SAC

log = logging.getLogger(__name__)


@dataclass
class Candidate:
    step: int
    report: EvalReport
    checkpoint: PolicyCheckpoint

    @property
    def key(self) -> tuple:
        # higher success, then higher return, then the earlier step
        return (self.report.success_rate, self.report.mean_return, -self.step)


@dataclass
class TrainResult:
    out_dir: Path
    best: PolicyCheckpoint
    best_step: int
    final: EvalReport
    retained: list[tuple[int, dict]]  # (step, interim evaluation summary), best first

    @property
    def best_path(self) -> Path:
        return self.out_dir / "best.ckpt"


def _meta(run: RunConfig, step: int) -> dict:
    meta = {"step": step, "seed": run.seed, "task": run.task}
    if run.task == "grasp":
        meta["episode"] = episode_config(run).to_dict()
    return meta


def _event(kind: str, step: int, report: EvalReport, **extra) -> dict:
    d = {"event": kind, "step": step}
    d.update(report.summary())
    d.update(extra)
    return d


def _stream_seed(root: int, seed_index: int, purpose: int) -> int:
    return int(seed_sequence(root, seed_index, purpose).generate_state(1, np.uint64)[0])


def train(run: RunConfig, out_dir: str | Path, seed_index: int = 0) -> TrainResult:
    """Runs the whole schedule and writes metrics.jsonl, checkpoints/ and best.ckpt under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ckpt_dir = out / "checkpoints"
    if ckpt_dir.exists():
        shutil.rmtree(ckpt_dir)
    ckpt_dir.mkdir()
    root = run.seed
    sub = (seed_index,)

    env = make_env(run)
    eval_env = make_env(run)
    init_rng = np.random.default_rng(seed_sequence(root, *sub, STREAM_INIT))
    act_rng = np.random.default_rng(seed_sequence(root, *sub, STREAM_ACT))
    upd_rng = np.random.default_rng(seed_sequence(root, *sub, STREAM_UPDATE))
    agent = SAC(env.obs_dim, env.action_dim, run.sac, init_rng)
    buffer = ReplayBuffer(min(run.sac.buffer_capacity, max(run.total_steps, 1)),
                          env.obs_dim, env.action_dim)
    interim_seed = _stream_seed(root, seed_index, STREAM_INTERIM_EVAL)
    final_seed = _stream_seed(root, seed_index, STREAM_FINAL_EVAL)

    retained: list[Candidate] = []
    metrics = JsonlWriter(out / "metrics.jsonl")
    episode = 0
    obs = env.reset(seed_sequence(root, *sub, STREAM_TRAIN_EPISODE, episode))
    agent.norm.update(obs)
    loss_acc: dict[str, float] = {}
    n_updates = 0
    ep_returns: list[float] = []
    ep_success: list[bool] = []
    ep_ret = 0.0

    def consider(step: int) -> None:
        ckpt = PolicyCheckpoint.from_agent(agent, _meta(run, step))
        report = evaluate(ckpt, eval_env, run.eval_episodes, interim_seed)
        cand = Candidate(step, report, ckpt)
        retained.append(cand)
        retained.sort(key=lambda c: c.key, reverse=True)
        for gone in retained[run.top_k:]:
            (ckpt_dir / f"step_{gone.step:08d}.ckpt").unlink(missing_ok=True)
        del retained[run.top_k:]
        if any(c is cand for c in retained):
            ckpt.save(ckpt_dir / f"step_{step:08d}.ckpt")
        losses = {k: v / n_updates for k, v in loss_acc.items()} if n_updates else {}
        recent = ep_success[-50:]
        metrics.write(_event(
            "eval", step, report, losses=losses, alpha=agent.alpha, updates=agent.updates,
            train_episodes=episode,
            train_success_rate=(sum(recent) / len(recent)) if recent else math.nan,
            train_mean_return=float(np.mean(ep_returns[-50:])) if ep_returns else math.nan,
            retained=[c.step for c in retained]))
        log.info("step %d: success %.2f return %.1f alpha %.3g", step, report.success_rate,
                 report.mean_return, agent.alpha)
        loss_acc.clear()

    try:
        for step in range(1, run.total_steps + 1):
            if step <= run.warmup_random_steps:
                action = act_rng.uniform(-1.0, 1.0, size=env.action_dim)
            else:
                action = agent.act(obs, act_rng)
            outcome = env.step(action)
            buffer.push(obs, action, outcome.reward, outcome.observation, outcome.done)
            agent.norm.update(outcome.observation)
            ep_ret += outcome.reward
            obs = outcome.observation
            if outcome.terminal is not None:
                ep_returns.append(ep_ret)
                ep_success.append(outcome.terminal.value == "success")
                ep_ret = 0.0
                episode += 1
                obs = env.reset(seed_sequence(root, *sub, STREAM_TRAIN_EPISODE, episode))
                agent.norm.update(obs)
            if step > run.warmup_random_steps and len(buffer) >= run.sac.batch_size:
                info = agent.update(buffer.sample(upd_rng, run.sac.batch_size), upd_rng)
                for k in ("q1_loss", "q2_loss", "actor_loss", "logp_mean"):
                    loss_acc[k] = loss_acc.get(k, 0.0) + info[k]
                n_updates += 1
            if step % run.eval_every == 0:
                consider(step)
                n_updates = 0
        if not retained:
            consider(run.total_steps)

        final_seed_reports = []
        for cand in sorted(retained, key=lambda c: c.step):
            rep = evaluate(cand.checkpoint, eval_env, run.final_selection_tests, final_seed)
            final_seed_reports.append((cand, rep))
            metrics.write(_event("final_selection", cand.step, rep))
        best_cand, best_rep = max(final_seed_reports,
                                 key=lambda cr: (cr[1].success_rate, cr[1].mean_return, -cr[0].step))
        best_cand.checkpoint.save(out / "best.ckpt")
        metrics.write(_event("best", best_cand.step, best_rep))
    finally:
        metrics.close()

    result = TrainResult(out, best_cand.checkpoint, best_cand.step, best_rep,
                         [(c.step, c.report.summary()) for c in retained])
    outputs = ["metrics.jsonl", "best.ckpt"] + [f"checkpoints/step_{c.step:08d}.ckpt" for c in retained]
    write_manifest(out, "train", run.seed, resolved_config(run), outputs)
    return result


def load_train_result(run: RunConfig, out_dir: str | Path, seed_index: int = 0) -> TrainResult:
    """Rebuild a finished training from its directory.

    The final report is recomputed from best.ckpt on the final-selection seeds and
    must agree with the logged one. A directory written for a different
    configuration is rejected.
    """
    out = Path(out_dir)
    try:
        manifest = json.loads((out / MANIFEST_NAME).read_text())
        events = read_jsonl(out / "metrics.jsonl")
    except FileNotFoundError as exc:
        raise ConfigError(f"no finished training in {out}: {exc.filename} missing") from None
    if manifest.get("config") != json.loads(dumps(resolved_config(run))):
        raise ConfigError(f"{out} was trained with a different configuration")
    best_event = [e for e in events if e["event"] == "best"][-1]
    best = load_checkpoint(out / "best.ckpt")
    env = make_env(run)
    final = evaluate(best, env, run.final_selection_tests,
                     _stream_seed(run.seed, seed_index, STREAM_FINAL_EVAL))
    if final.successes != round(best_event["success_rate"] * best_event["episodes"]):
        raise IntegrityError(f"{out}: best checkpoint no longer reproduces its logged evaluation")
    evals = {e["step"]: e for e in events if e["event"] == "eval"}
    last = max(evals) if evals else None
    keep = ("episodes", "success_rate", "mean_return", "mean_displacement", "mean_length",
            "success_rate_defined")
    retained = [(step, {k: evals[step][k] for k in keep})
                for step in (evals[last]["retained"] if last is not None else [])]
    return TrainResult(out, best, int(best_event["step"]), final, retained)
