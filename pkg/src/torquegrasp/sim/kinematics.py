"""Forward kinematics of the planar hand."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from torquegrasp.errors import ConfigError
from torquegrasp.sim.geometry import Pose2
from torquegrasp.sim.model import PALM_LINK, HandSpec


@dataclass(frozen=True)
class Segment:
    a: tuple[float, float]
    b: tuple[float, float]
    radius: float
    link_id: int


@dataclass(frozen=True)
class Kinematics:
    segments: list[Segment]
    palm_point: tuple[float, float]
    palm_segment: Segment
    # per finger link: [(dof index, joint origin x, joint origin y), ...] up to and including itself
    chains: dict[int, list[tuple[int, float, float]]]

    @property
    def all_segments(self) -> list[Segment]:
        return self.segments + [self.palm_segment]


def _fk_raw(spec: HandSpec, x: float, y: float, th: float, q: Sequence[float]):
    """Inner-loop FK on floats.

    Returns (segments as (ax, ay, bx, by, r, link_id) tuples, chains, palm point).
    """
    c, s = math.cos(th), math.sin(th)
    segs = []
    chains = {}
    link_id = 0
    qi = 0
    for finger in spec.fingers:
        px = x + c * finger.attach[0] - s * finger.attach[1]
        py = y + s * finger.attach[0] + c * finger.attach[1]
        angle = th + finger.attach_angle
        chain: list[tuple[int, float, float]] = []
        for link in finger.links:
            angle += q[qi]
            chain = chain + [(3 + qi, px, py)]
            ex = px + link.length * math.cos(angle)
            ey = py + link.length * math.sin(angle)
            segs.append((px, py, ex, ey, link.radius, link_id))
            chains[link_id] = chain
            px, py = ex, ey
            link_id += 1
            qi += 1
    (a0, a1), (b0, b1), r = spec.palm_capsule()
    segs.append((x + c * a0 - s * a1, y + s * a0 + c * a1,
                 x + c * b0 - s * b1, y + s * b0 + c * b1, r, PALM_LINK))
    rx, ry = spec.palm_reference
    palm = (x + c * rx - s * ry, y + s * rx + c * ry)
    return segs, chains, palm


def forward_kinematics(spec: HandSpec, base: Pose2, q: Sequence[float]) -> Kinematics:
    """World-frame link capsules and palm point for a base pose and joint angles."""
    if len(q) != spec.n_joints:
        raise ConfigError(f"expected {spec.n_joints} joint angles, got {len(q)}")
    segs, chains, palm = _fk_raw(spec, base.x, base.y, base.theta, [float(v) for v in q])
    out = [Segment((s[0], s[1]), (s[2], s[3]), s[4], s[5]) for s in segs]
    return Kinematics(out[:-1], palm, out[-1], chains)


def palm_point(spec: HandSpec, base: Pose2) -> tuple[float, float]:
    return base.apply(spec.palm_reference)
