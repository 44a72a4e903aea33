"""Central finite-difference checks of the hand-written gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from torquegrasp.learn.nets import DenseNet

FD_STEP = 1e-5


def relative_error(analytic: float, numeric: float, floor: float = 1e-8) -> float:
    """|a - n| / max(|a|, |n|, floor)."""
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def numeric_gradient(loss: Callable[[], float], params: Sequence[np.ndarray],
                     step: float = FD_STEP) -> list[np.ndarray]:
    """Perturbs every entry of every array in place (and restores it)."""
    out = []
    for p in params:
        g = np.zeros_like(p)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + step
            up = loss()
            flat[i] = keep - step
            down = loss()
            flat[i] = keep
            gflat[i] = (up - down) / (2.0 * step)
        out.append(g)
    return out


def max_relative_error(analytic: Sequence[np.ndarray], numeric: Sequence[np.ndarray]) -> float:
    worst = 0.0
    for a, n in zip(analytic, numeric):
        for x, y in zip(a.reshape(-1), n.reshape(-1)):
            worst = max(worst, relative_error(float(x), float(y)))
    return worst


def _net_loss(net: DenseNet, x: np.ndarray, target: np.ndarray) -> float:
    out = net.forward(x)
    return float(0.5 * np.sum((out - target) ** 2) + np.sum(np.sin(out)))


def check_network(rng: np.random.Generator, sizes: Sequence[int], batch: int = 5) -> float:
    net = DenseNet.init(sizes, rng, np.float64)
    x = rng.standard_normal((batch, sizes[0]))
    target = rng.standard_normal((batch, sizes[-1]))
    out, cache = net.forward(x, keep=True)
    analytic = net.backward(cache, (out - target) + np.cos(out))
    numeric = numeric_gradient(lambda: _net_loss(net, x, target), net.params)
    return max_relative_error(analytic, numeric)


def check_actor(rng: np.random.Generator) -> float:
    """Actor objective through the squashed sample and both critics, tiny float64 nets."""
    from torquegrasp.learn.sac import SAC, SacConfig
    cfg = SacConfig(hidden=(6, 5), dtype="float64", batch_size=4, buffer_capacity=4)
    agent = SAC(3, 2, cfg, rng)
    obs = rng.standard_normal((4, 3))
    noise = rng.standard_normal((4, 2))
    _, analytic, _ = agent.actor_loss_and_grads(obs, noise)
    numeric = numeric_gradient(lambda: agent.actor_loss_and_grads(obs, noise)[0],
                               agent.policy.net.params)
    return max_relative_error(analytic, numeric)


@dataclass
class GradcheckReport:
    networks: list[tuple[tuple[int, ...], float]]
    actor: float

    @property
    def max_error(self) -> float:
        return max([e for _, e in self.networks] + [self.actor])


def run_gradcheck(seed: int = 0) -> GradcheckReport:
    rng = np.random.default_rng(seed)
    shapes = [(3, 4, 2), (5, 7, 6, 3), (2, 8, 8, 1)]
    nets = [(s, check_network(rng, s)) for s in shapes]
    return GradcheckReport(nets, check_actor(rng))
