"""Command-line entry point: `torquegrasp <command> [flags]`."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from torquegrasp.errors import ConfigError, IntegrityError, SimulationDiverged, TrainingError

OUT_ENV = "TORQUEGRASP_OUT"
COMMANDS = ("train", "eval", "ablate", "scatter", "sweep-noise", "sweep-mass", "replay",
            "gradcheck", "print-config")
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2; configuration problems are 1 here
        raise ConfigError(message)


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="torquegrasp", description="Torque-feedback grasp learning on a planar hand.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, checkpoint=False):
        sp.add_argument("--scene", help="scene JSON (default: packaged scene)")
        sp.add_argument("--grasp", help="grasp JSON (default: packaged grasp)")
        sp.add_argument("--episode", help="episode config JSON")
        sp.add_argument("--run", help="run config JSON, applied on top of the preset")
        sp.add_argument("--preset", choices=("desk", "paper", "pointmass"), default="desk")
        sp.add_argument("--seed", type=_seed, default=None)
        sp.add_argument("--out", help=f"output directory (or ${OUT_ENV})")
        sp.add_argument("-v", "--verbose", action="store_true")
        if checkpoint:
            sp.add_argument("--checkpoint", required=True, help="policy checkpoint file")

    sp = sub.add_parser("train", help="train one policy")
    common(sp)
    sp.add_argument("--task", choices=("grasp", "pointmass"), default=None)
    sp.add_argument("--zero-torque", action="store_true", help="train with the torque block zeroed")
    sp.add_argument("--total-steps", type=int, default=None)

    sp = sub.add_parser("eval", help="evaluate a checkpoint")
    common(sp, checkpoint=True)
    sp.add_argument("--episodes", type=int, default=100)

    sp = sub.add_parser("ablate", help="train with and without torque feedback and compare")
    common(sp)
    sp.add_argument("--total-steps", type=int, default=None)

    for name in ("scatter", "sweep-noise", "sweep-mass"):
        sp = sub.add_parser(name)
        common(sp, checkpoint=True)

    sp = sub.add_parser("replay", help="record an episode and re-simulate it, or replay a file")
    common(sp)
    sp.add_argument("--checkpoint", help="record a fresh episode with this policy first")
    sp.add_argument("--trajectory", help="replay this trajectory file")
    sp.add_argument("--index", type=int, default=0, help="episode index within the seed")

    sp = sub.add_parser("gradcheck", help="finite-difference check of the learner's gradients")
    sp.add_argument("--seed", type=_seed, default=0)
    sp.add_argument("--out")
    sp.add_argument("-v", "--verbose", action="store_true")

    sp = sub.add_parser("print-config", help="print the fully resolved configuration")
    common(sp)
    return p


def _check_files(args) -> None:
    for flag in ("scene", "grasp", "episode", "run", "checkpoint", "trajectory"):
        value = getattr(args, flag, None)
        if value is not None and not Path(value).is_file():
            raise ConfigError(f"--{flag}: file not found: {value}")


def _out_dir(args) -> Path:
    if args.out:
        return Path(args.out)
    if os.environ.get(OUT_ENV):
        return Path(os.environ[OUT_ENV])
    return Path("runs") / args.command


def _run_config(args):
    from torquegrasp.harness.config import load_run, preset
    run = load_run(args.run, preset(args.preset))
    changes = {}
    for flag in ("scene", "grasp", "episode"):
        if getattr(args, flag, None) is not None:
            changes[flag] = getattr(args, flag)
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "task", None):
        changes["task"] = args.task
    if getattr(args, "zero_torque", False):
        changes["zero_torque"] = True
    if getattr(args, "total_steps", None) is not None:
        changes["total_steps"] = args.total_steps
        changes["warmup_random_steps"] = min(run.warmup_random_steps, args.total_steps)
    return run.with_(**changes)


def _load_ckpt(args, run):
    from torquegrasp.harness.config import make_env
    from torquegrasp.harness.experiments import _ckpt_episode
    from torquegrasp.learn.checkpoint import load_checkpoint
    ckpt = load_checkpoint(args.checkpoint)
    if ckpt.meta.get("task") == "pointmass":
        run = run.with_(task="pointmass")
    env = make_env(run, _ckpt_episode(ckpt, run) if run.task == "grasp" else None)
    if ckpt.obs_dim != env.obs_dim or ckpt.act_dim != env.action_dim:
        raise ConfigError(
            f"--checkpoint: dimensions ({ckpt.obs_dim}, {ckpt.act_dim}) do not match the "
            f"environment ({env.obs_dim}, {env.action_dim})")
    return ckpt, run, env


def _fmt(v) -> str:
    return f"{v:.4g}" if isinstance(v, float) else str(v)


def _summary(command: str, seed, **metrics) -> str:
    return " ".join([command, f"seed={seed}"] + [f"{k}={_fmt(v)}" for k, v in metrics.items()])


def _cmd_train(args, out: Path) -> str:
    from torquegrasp.harness.figures import plot_learning_curve
    from torquegrasp.harness.io import read_jsonl
    from torquegrasp.harness.train import train
    run = _run_config(args)
    results = []
    for k in range(run.n_seeds):
        target = out if run.n_seeds == 1 else out / f"seed_{k}"
        r = train(run, target, seed_index=k)
        plot_learning_curve(read_jsonl(target / "metrics.jsonl"), target / "learning_curve.png")
        results.append(r)
    best = max(results, key=lambda r: r.final.success_rate)
    return _summary("train", run.seed, success_rate=best.final.success_rate,
                    best_step=best.best_step, checkpoint=best.best_path)


def _cmd_eval(args, out: Path) -> str:
    from torquegrasp.harness.config import resolved_config
    from torquegrasp.harness.evaluate import ROW_HEADER, evaluate
    from torquegrasp.harness.io import dumps, write_csv, write_manifest
    run = _run_config(args)
    ckpt, run, env = _load_ckpt(args, run)
    if args.episodes < 0:
        raise ConfigError("--episodes must be >= 0")
    rep = evaluate(ckpt, env, args.episodes, run.seed)
    write_csv(out / "eval.csv", ROW_HEADER, rep.rows())
    (out / "eval_summary.json").write_text(dumps(rep.summary()) + "\n")
    write_manifest(out, "eval", run.seed, resolved_config(run), ["eval.csv", "eval_summary.json"])
    rate = rep.success_rate if rep.defined else "undefined"
    return _summary("eval", run.seed, success_rate=rate, episodes=rep.n)


def _cmd_ablate(args, out: Path) -> str:
    from torquegrasp.harness.config import resolved_config
    from torquegrasp.harness.experiments import ablate_torque
    from torquegrasp.harness.figures import plot_ablation
    from torquegrasp.harness.io import write_manifest
    run = _run_config(args)
    res = ablate_torque(run, out)
    s = res.summary()
    plot_ablation(res.trajectories, {"with_feedback": s["with_feedback_success"],
                                     "zero_torque": s["zero_torque_success"]}, out / "ablation.png")
    write_manifest(out, "ablate", run.seed, resolved_config(run),
                   ["ablation.csv", "ablation_summary.json", "ablation.png"])
    return _summary("ablate", run.seed, with_feedback=s["with_feedback_success"],
                    zero_torque=s["zero_torque_success"])


def _cmd_scatter(args, out: Path) -> str:
    from torquegrasp.harness.config import resolved_config
    from torquegrasp.harness.experiments import scatter
    from torquegrasp.harness.figures import plot_scatter
    from torquegrasp.harness.io import write_manifest
    run = _run_config(args)
    ckpt, run, _ = _load_ckpt(args, run)
    rep = scatter(ckpt, run, out)
    plot_scatter(rep, out / "scatter.png")
    write_manifest(out, "scatter", run.seed, resolved_config(run), ["scatter.csv", "scatter.png"])
    return _summary("scatter", run.seed, success_rate=rep.success_rate, rows=rep.n)


def _cmd_sweep(args, out: Path, kind: str) -> str:
    from torquegrasp.harness.config import resolved_config
    from torquegrasp.harness.experiments import mass_sweep, noise_sweep
    from torquegrasp.harness.figures import plot_sweep
    from torquegrasp.harness.io import write_manifest
    run = _run_config(args)
    ckpt, run, _ = _load_ckpt(args, run)
    if kind == "noise":
        rows = noise_sweep(ckpt, run, out)
        plot_sweep(rows, out / "noise_sweep.png", "torque noise (fraction of tau_max)",
                   "torque-noise robustness")
        files = ["noise_sweep.csv", "noise_sweep.png"]
        key = {"level0": rows[0][1].success_rate, "level1": rows[-1][1].success_rate}
    else:
        rows = mass_sweep(ckpt, run, out)
        plot_sweep(rows, out / "mass_sweep.png", "mass (fraction of trained)",
                   "lighter objects, 0.03 m tolerance", bar=True)
        files = ["mass_sweep.csv", "mass_sweep.png"]
        key = {f"scale_{s:g}": r.success_rate for s, r in rows}
    write_manifest(out, f"sweep-{kind}", run.seed, resolved_config(run), files)
    return _summary(f"sweep-{kind}", run.seed, **key)


def _cmd_replay(args, out: Path) -> str:
    from torquegrasp.harness.experiments import record_episode, replay
    from torquegrasp.harness.io import write_manifest
    run = _run_config(args)
    if args.trajectory is None and args.checkpoint is None:
        raise ConfigError("--trajectory or --checkpoint is required")
    path = Path(args.trajectory) if args.trajectory else out / "trajectory.jsonl"
    if args.checkpoint:
        ckpt, run, _ = _load_ckpt(args, run)
        record_episode(ckpt, run, path, run.seed, args.index)
        write_manifest(out, "replay", run.seed, {"run": run.to_dict()}, ["trajectory.jsonl"])
    res = replay(path)
    return _summary("replay", run.seed, steps=res["steps"], terminal=res["terminal"], bitwise="ok")


def _cmd_gradcheck(args, out: Path | None) -> tuple[str, int]:
    from torquegrasp.learn.gradcheck import run_gradcheck
    rep = run_gradcheck(args.seed)
    code = EXIT_OK if rep.max_error <= 1e-4 else EXIT_RUNTIME
    return _summary("gradcheck", args.seed, max_relative_error=rep.max_error), code


def _cmd_print_config(args) -> str:
    from torquegrasp.harness.config import resolved_config
    from torquegrasp.harness.io import dumps
    return json.dumps(json.loads(dumps(resolved_config(_run_config(args)))), indent=2, sort_keys=True)


def run(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                            format="%(asctime)s %(name)s %(message)s")
        _check_files(args)
        cmd = args.command
        if cmd == "print-config":
            print(_cmd_print_config(args))
            return EXIT_OK
        if cmd == "gradcheck":
            line, code = _cmd_gradcheck(args, None)
            print(line)
            return code
        out = _out_dir(args)
        out.mkdir(parents=True, exist_ok=True)
        handlers = {
            "train": _cmd_train, "eval": _cmd_eval, "ablate": _cmd_ablate, "scatter": _cmd_scatter,
            "sweep-noise": lambda a, o: _cmd_sweep(a, o, "noise"),
            "sweep-mass": lambda a, o: _cmd_sweep(a, o, "mass"),
            "replay": _cmd_replay,
        }
        print(handlers[cmd](args, out))
        return EXIT_OK
    except ConfigError as exc:
        print(f"torquegrasp: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TrainingError, IntegrityError, SimulationDiverged) as exc:
        print(f"torquegrasp: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
