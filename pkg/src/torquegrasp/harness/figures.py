"""Matplotlib renderings of the experiment outputs (written to files, never shown)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from torquegrasp.harness.evaluate import EvalReport  # noqa: E402


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # fixed metadata keeps the files byte-stable between identical runs
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def plot_learning_curve(events: Sequence[dict], path: str | Path, title: str = "") -> Path:
    ev = [e for e in events if e.get("event") == "eval"]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot([e["step"] for e in ev], [e["success_rate"] for e in ev], marker=".")
    ax.set_xlabel("environment steps")
    ax.set_ylabel("interim success rate")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title(title or "training progress")
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_ablation(trajectories: dict, rates: dict[str, float], path: str | Path) -> Path:
    """Palm-x (solid) and object-x (dashed) per scenario, one panel per variant, plus success bars."""
    fig, axes = plt.subplots(1, 3, figsize=(13, 3.8))
    colors = ["tab:blue", "tab:orange", "tab:green"]
    for ax, name in zip(axes[:2], ("with_feedback", "zero_torque")):
        for k, t in enumerate(trajectories.get(name, [])):
            label = f"eps=({t.epsilon[0]:+.3f}, {t.epsilon[1]:+.3f}) {t.terminal}"
            ax.plot(t.palm[:, 0], color=colors[k % 3], label=label)
            ax.plot(t.object[:, 0], color=colors[k % 3], linestyle="--")
        ax.set_title(name.replace("_", " "))
        ax.set_xlabel("control step")
        ax.set_ylabel("x (m)")
        ax.legend(fontsize=7)
        ax.grid(alpha=0.3)
    names = list(rates)
    axes[2].bar(names, [rates[n] for n in names], color=["tab:blue", "tab:gray"][:len(names)])
    axes[2].set_ylim(0, 1)
    axes[2].set_ylabel("success rate")
    axes[2].set_title("final selection")
    return _save(fig, path)


def plot_scatter(report: EvalReport, path: str | Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ok = [e for e in report.episodes if e.success]
    bad = [e for e in report.episodes if not e.success]
    ax.scatter([100 * e.epsilon[0] for e in ok], [100 * e.epsilon[1] for e in ok],
               marker="o", facecolors="none", edgecolors="green", label="success")
    ax.scatter([100 * e.epsilon[0] for e in bad], [100 * e.epsilon[1] for e in bad],
               marker="^", color="red", label="failure")
    ax.set_xlim(-2.2, 2.2)
    ax.set_ylim(-2.2, 2.2)
    ax.set_xlabel("object offset x (cm)")
    ax.set_ylabel("object offset y (cm)")
    ax.set_title(title or f"success {report.successes}/{report.n}")
    ax.legend(fontsize=8, loc="upper right")
    ax.set_aspect("equal")
    return _save(fig, path)


def plot_sweep(rows: Sequence[tuple[float, EvalReport]], path: str | Path, xlabel: str,
               title: str = "", bar: bool = False) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    xs = [x for x, _ in rows]
    ys = [r.success_rate for _, r in rows]
    if bar:
        ax.bar([str(x) for x in xs], ys, color="tab:blue")
    else:
        ax.plot(xs, ys, marker="o")
    ax.set_ylim(-0.05, 1.05)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("success rate")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    return _save(fig, path)
