"""Binary policy checkpoints: magic, JSON header, little-endian float64 blocks."""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from torquegrasp.errors import ConfigError, IntegrityError
from torquegrasp.learn.buffer import RunningNorm
from torquegrasp.learn.nets import DenseNet
from torquegrasp.learn.sac import SAC, Policy

MAGIC = b"TQGRASP\x00"
FORMAT_VERSION = 1
_LE_F8 = np.dtype("<f8")


@dataclass
class PolicyCheckpoint:
    """Everything evaluation needs: the actor network and frozen normaliser statistics."""

    policy: Policy
    norm: RunningNorm
    meta: dict = field(default_factory=dict)

    @property
    def obs_dim(self) -> int:
        return self.policy.obs_dim

    @property
    def act_dim(self) -> int:
        return self.policy.act_dim

    @classmethod
    def from_agent(cls, agent: SAC, meta: dict | None = None) -> "PolicyCheckpoint":
        net = agent.policy.net.astype(np.float64)
        return cls(Policy(net, agent.act_dim), agent.norm.snapshot(), dict(meta or {}))

    def act(self, obs: np.ndarray) -> np.ndarray:
        """Deterministic (mean) action."""
        x = self.norm(np.atleast_2d(obs)).astype(self.policy.net.dtype)
        return self.policy.deterministic(x)[0].astype(float)

    def to_bytes(self) -> bytes:
        blocks = [self.norm.mean, self.norm.m2] + self.policy.net.params
        payload = b"".join(np.ascontiguousarray(b, dtype=_LE_F8).tobytes() for b in blocks)
        header = {
            "format_version": FORMAT_VERSION,
            "kind": "policy",
            "layer_sizes": list(self.policy.net.sizes),
            "obs_dim": self.obs_dim,
            "act_dim": self.act_dim,
            "norm_count": self.norm.count,
            "norm_clip": self.norm.clip,
            "payload_bytes": len(payload),
            "payload_crc32": zlib.crc32(payload),
            "meta": self.meta,
        }
        hbytes = json.dumps(header, sort_keys=True).encode()
        return MAGIC + struct.pack("<I", len(hbytes)) + hbytes + payload

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())


def _blocks_for(sizes: list[int], obs_dim: int) -> list[tuple[int, ...]]:
    shapes: list[tuple[int, ...]] = [(obs_dim,), (obs_dim,)]
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        shapes += [(n_in, n_out), (n_out,)]
    return shapes


def checkpoint_from_bytes(data: bytes) -> PolicyCheckpoint:
    if not data.startswith(MAGIC) or len(data) < len(MAGIC) + 4:
        raise IntegrityError("not a policy checkpoint (bad magic)")
    (hlen,) = struct.unpack_from("<I", data, len(MAGIC))
    start = len(MAGIC) + 4
    try:
        header = json.loads(data[start:start + hlen])
    except (ValueError, UnicodeDecodeError) as exc:
        raise IntegrityError(f"unreadable checkpoint header: {exc}") from None
    if header.get("format_version") != FORMAT_VERSION:
        raise IntegrityError(f"unsupported checkpoint format {header.get('format_version')!r}")
    payload = data[start + hlen:]
    if len(payload) != header["payload_bytes"] or zlib.crc32(payload) != header["payload_crc32"]:
        raise IntegrityError("checkpoint payload is truncated or corrupted")
    sizes = [int(s) for s in header["layer_sizes"]]
    obs_dim, act_dim = int(header["obs_dim"]), int(header["act_dim"])
    if sizes[0] != obs_dim or sizes[-1] != 2 * act_dim:
        raise IntegrityError("checkpoint header dimensions are inconsistent")
    arrays, off = [], 0
    for shape in _blocks_for(sizes, obs_dim):
        n = int(np.prod(shape))
        arrays.append(np.frombuffer(payload, _LE_F8, n, off).reshape(shape).astype(np.float64))
        off += 8 * n
    if off != len(payload):
        raise IntegrityError("checkpoint payload size does not match its layer sizes")
    norm = RunningNorm(obs_dim, float(header["norm_clip"]))
    norm.count = int(header["norm_count"])
    norm.mean, norm.m2 = arrays[0], arrays[1]
    norm.frozen = True
    params = arrays[2:]
    net = DenseNet(tuple(sizes), params[0::2], params[1::2])
    return PolicyCheckpoint(Policy(net, act_dim), norm, header.get("meta", {}))


def load_checkpoint(path: str | Path, obs_dim: int | None = None,
                    act_dim: int | None = None) -> PolicyCheckpoint:
    try:
        data = Path(path).read_bytes()
    except FileNotFoundError:
        raise ConfigError(f"checkpoint not found: {path}") from None
    ckpt = checkpoint_from_bytes(data)
    if obs_dim is not None and ckpt.obs_dim != obs_dim:
        raise ConfigError(f"checkpoint expects {ckpt.obs_dim} observations, environment gives {obs_dim}")
    if act_dim is not None and ckpt.act_dim != act_dim:
        raise ConfigError(f"checkpoint emits {ckpt.act_dim} actions, environment takes {act_dim}")
    return ckpt
