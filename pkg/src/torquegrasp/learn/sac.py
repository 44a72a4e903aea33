"""Soft Actor-Critic with twin critics, a tanh-squashed Gaussian policy and a tuned temperature."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Callable, Mapping

import numpy as np

from torquegrasp.errors import ConfigError, TrainingError
from torquegrasp.learn.buffer import Batch, RunningNorm
from torquegrasp.learn.nets import Adam, DenseNet, polyak

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
SQUASH_EPS = 1e-6
HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class SacConfig:
    gamma: float = 0.99
    tau: float = 0.005
    actor_lr: float = 3e-4
    critic_lr: float = 3e-4
    alpha_lr: float = 3e-4
    batch_size: int = 256
    buffer_capacity: int = 1_000_000
    init_alpha: float = 0.2
    target_entropy: float | None = None  # None means -action_dim
    hidden: tuple[int, ...] = (256, 256)
    auto_alpha: bool = True
    reward_scale: float = 1.0
    dtype: str = "float32"

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError("sac.gamma must lie in (0, 1)")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError("sac.tau must lie in (0, 1]")
        if not self.init_alpha > 0.0:
            raise ConfigError("sac.init_alpha must be > 0")
        if self.batch_size < 1 or self.buffer_capacity < self.batch_size:
            raise ConfigError("sac.batch_size must be >= 1 and no larger than the buffer")
        if self.dtype not in ("float32", "float64"):
            raise ConfigError("sac.dtype must be 'float32' or 'float64'")
        if not self.reward_scale > 0.0:
            raise ConfigError("sac.reward_scale must be > 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


def sac_from_dict(d: Mapping) -> SacConfig:
    names = {f.name for f in fields(SacConfig)}
    unknown = set(d) - names
    if unknown:
        raise ConfigError(f"sac: unknown keys {sorted(unknown)}")
    kw = dict(d)
    if "hidden" in kw:
        kw["hidden"] = tuple(int(v) for v in kw["hidden"])
    return SacConfig(**kw)


# ---------------------------------------------------------------- policy math

def split_head(out: np.ndarray, act_dim: int):
    """(mean, clamped log-std, mask of unclamped log-std entries)."""
    mean = out[:, :act_dim]
    raw = out[:, act_dim:]
    log_std = np.clip(raw, LOG_STD_MIN, LOG_STD_MAX)
    inside = (raw >= LOG_STD_MIN) & (raw <= LOG_STD_MAX)
    return mean, log_std, inside


def _open_tanh(u: np.ndarray) -> np.ndarray:
    # tanh rounds to exactly +-1 for large |u|; keep actions strictly inside (-1, 1)
    lim = np.nextafter(u.dtype.type(1.0), u.dtype.type(0.0))
    return np.clip(np.tanh(u), -lim, lim)


def squash(mean: np.ndarray, log_std: np.ndarray, noise: np.ndarray):
    """Reparameterised tanh-Gaussian sample: (action, log-probability per row, pre-squash u)."""
    std = np.exp(log_std)
    u = mean + std * noise
    a = _open_tanh(u)
    logp = (-0.5 * noise ** 2 - log_std - HALF_LOG_2PI).sum(axis=1)
    logp = logp - np.log(1.0 - a * a + SQUASH_EPS).sum(axis=1)
    return a, logp, u


def squashed_log_density(a: float, mean: float, log_std: float) -> float:
    """Log-density of a = tanh(u), u ~ N(mean, exp(log_std)^2), with the same epsilon as squash()."""
    u = math.atanh(a)
    z = (u - mean) / math.exp(log_std)
    return -0.5 * z * z - log_std - HALF_LOG_2PI - math.log(1.0 - a * a + SQUASH_EPS)


class Policy:
    """Observation -> (mean, log-std) network; acts on normalised observations."""

    def __init__(self, net: DenseNet, act_dim: int):
        if net.sizes[-1] != 2 * act_dim:
            raise ConfigError("policy head must emit a mean and a log-std per action")
        self.net = net
        self.act_dim = act_dim

    @property
    def obs_dim(self) -> int:
        return self.net.sizes[0]

    def head(self, x: np.ndarray):
        return split_head(self.net.forward(x), self.act_dim)

    def sample(self, x: np.ndarray, rng: np.random.Generator):
        mean, log_std, _ = self.head(x)
        noise = rng.standard_normal(mean.shape).astype(mean.dtype)
        a, logp, _ = squash(mean, log_std, noise)
        return a, logp

    def deterministic(self, x: np.ndarray) -> np.ndarray:
        mean, _, _ = self.head(x)
        return _open_tanh(mean)


def policy_sample(policy: Policy, observation: np.ndarray, rng: np.random.Generator):
    """One stochastic action and its log-probability for a single observation."""
    a, logp = policy.sample(np.atleast_2d(observation), rng)
    return a[0], float(logp[0])


# ---------------------------------------------------------------- agent


def _q_input(obs: np.ndarray, act: np.ndarray) -> np.ndarray:
    return np.concatenate([obs, act.astype(obs.dtype, copy=False)], axis=1)


class SAC:
    """Training state for one agent: actor, twin critics and their targets, temperature, normaliser."""

    def __init__(self, obs_dim: int, act_dim: int, cfg: SacConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.dtype = np.dtype(cfg.dtype)
        hidden = tuple(cfg.hidden)
        self.policy = Policy(DenseNet.init((obs_dim, *hidden, 2 * act_dim), rng, self.dtype), act_dim)
        self.q1 = DenseNet.init((obs_dim + act_dim, *hidden, 1), rng, self.dtype)
        self.q2 = DenseNet.init((obs_dim + act_dim, *hidden, 1), rng, self.dtype)
        self.q1_target = self.q1.copy()
        self.q2_target = self.q2.copy()
        self.log_alpha = math.log(cfg.init_alpha)
        self.target_entropy = -float(act_dim) if cfg.target_entropy is None else cfg.target_entropy
        self.actor_opt = Adam(self.policy.net.params, cfg.actor_lr)
        self.critic_opt = Adam(self.q1.params + self.q2.params, cfg.critic_lr)
        self.alpha_opt = Adam([np.zeros(1)], cfg.alpha_lr)
        self.norm = RunningNorm(obs_dim)
        self.updates = 0
        # called as hook(site, q1, q2, qmin) wherever the twin minimum is taken
        self.min_hook: Callable | None = None

    @property
    def alpha(self) -> float:
        return math.exp(self.log_alpha)

    def _twin_min(self, site: str, q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
        qmin = np.minimum(q1, q2)
        if self.min_hook is not None:
            self.min_hook(site, q1, q2, qmin)
        return qmin

    def _prep(self, batch: Batch):
        obs = self.norm(batch.obs).astype(self.dtype)
        next_obs = self.norm(batch.next_obs).astype(self.dtype)
        return obs, next_obs

    # -- critics

    def critic_target(self, batch: Batch, next_obs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        a2, logp2 = self.policy.sample(next_obs, rng)
        x2 = _q_input(next_obs, a2)
        qmin = self._twin_min("target", self.q1_target.forward(x2)[:, 0], self.q2_target.forward(x2)[:, 0])
        rew = batch.rew * self.cfg.reward_scale
        y = rew + self.cfg.gamma * (1.0 - batch.done) * (qmin - self.alpha * logp2)
        return y.astype(self.dtype)

    def critic_update(self, batch: Batch, rng: np.random.Generator, prepared=None) -> dict:
        obs, next_obs = prepared if prepared is not None else self._prep(batch)
        y = self.critic_target(batch, next_obs, rng)
        if not np.all(np.isfinite(y)):
            raise TrainingError("non-finite critic target")
        x = _q_input(obs, batch.act)
        n = len(y)
        grads, losses = [], []
        for net in (self.q1, self.q2):
            q, cache = net.forward(x, keep=True)
            err = q[:, 0] - y
            losses.append(float(np.mean(err.astype(float) ** 2)))
            grads += net.backward(cache, (2.0 / n) * err[:, None])
        if not all(math.isfinite(v) for v in losses):
            raise TrainingError("non-finite critic loss")
        self.critic_opt.step(grads)
        return {"q1_loss": losses[0], "q2_loss": losses[1], "target_mean": float(np.mean(y))}

    # -- actor

    def actor_loss_and_grads(self, obs: np.ndarray, noise: np.ndarray):
        """Loss mean(alpha*logp - min(Q1, Q2)) and its gradient for every policy parameter."""
        net = self.policy.net
        out, cache = net.forward(obs, keep=True)
        mean, log_std, inside = split_head(out, self.act_dim)
        a, logp, _ = squash(mean, log_std, noise)
        x = _q_input(obs, a)
        q1, c1 = self.q1.forward(x, keep=True)
        q2, c2 = self.q2.forward(x, keep=True)
        qmin = self._twin_min("actor", q1[:, 0], q2[:, 0])
        alpha = self.dtype.type(self.alpha)
        n = obs.shape[0]
        loss = float(np.mean(alpha * logp - qmin))

        pick1 = (q1[:, 0] <= q2[:, 0]).astype(self.dtype)[:, None]
        gx1 = self.q1.backward(c1, -pick1 / n, need_input=True, need_params=False)
        gx2 = self.q2.backward(c2, -(1.0 - pick1) / n, need_input=True, need_params=False)
        g_a = (gx1 + gx2)[:, self.obs_dim:]

        one_m = 1.0 - a * a
        # d/du of -log(1 - tanh(u)^2 + eps)
        dsq = 2.0 * a * one_m / (one_m + SQUASH_EPS)
        g_u = g_a * one_m + (alpha / n) * dsq
        std = np.exp(log_std)
        g_mean = g_u
        g_log_std = (g_u * std * noise - alpha / n) * inside
        grads = net.backward(cache, np.concatenate([g_mean, g_log_std], axis=1))
        return loss, grads, logp

    def actor_update(self, obs: np.ndarray, rng: np.random.Generator) -> dict:
        noise = rng.standard_normal((obs.shape[0], self.act_dim)).astype(self.dtype)
        loss, grads, logp = self.actor_loss_and_grads(obs, noise)
        if not math.isfinite(loss):
            raise TrainingError("non-finite actor loss")
        self.actor_opt.step(grads)
        return {"actor_loss": loss, "logp_mean": float(np.mean(logp)), "_logp": logp}

    # -- temperature

    def alpha_gradient(self, logp: np.ndarray) -> float:
        """d/d(log alpha) of mean(-alpha * (logp + target_entropy))."""
        return -self.alpha * float(np.mean(logp.astype(float) + self.target_entropy))

    def alpha_update(self, logp: np.ndarray) -> dict:
        if self.cfg.auto_alpha:
            p = self.alpha_opt.params[0]
            p[0] = self.log_alpha
            self.alpha_opt.step([np.array([self.alpha_gradient(logp)])])
            self.log_alpha = float(p[0])
        return {"alpha": self.alpha}

    # -- full step

    def update(self, batch: Batch, rng: np.random.Generator) -> dict:
        prepared = self._prep(batch)
        info = self.critic_update(batch, rng, prepared)
        a_info = self.actor_update(prepared[0], rng)
        logp = a_info.pop("_logp")
        info.update(a_info)
        info.update(self.alpha_update(logp))
        polyak(self.q1_target.params, self.q1.params, self.cfg.tau)
        polyak(self.q2_target.params, self.q2.params, self.cfg.tau)
        self.updates += 1
        return info

    # -- acting

    def act(self, obs: np.ndarray, rng: np.random.Generator | None = None,
            deterministic: bool = False) -> np.ndarray:
        x = self.norm(np.atleast_2d(obs)).astype(self.dtype)
        if deterministic:
            return self.policy.deterministic(x)[0].astype(float)
        a, _ = self.policy.sample(x, rng)
        return a[0].astype(float)
