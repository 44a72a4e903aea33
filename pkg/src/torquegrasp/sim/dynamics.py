"""Penalty-contact dynamics of a PD-controlled hand pushing a free object."""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Sequence

import numpy as np

from torquegrasp.errors import ConfigError, SimulationDiverged
from torquegrasp.sim.geometry import Pose2, WorldPolygon, capsule_polygon_query, wrap_angle
from torquegrasp.sim.kinematics import Segment, _fk_raw
from torquegrasp.sim.model import (
    PALM_LINK,
    ContactPoint,
    HandSpec,
    HandState,
    ObjectBody,
    SimConfig,
    WorldState,
)


def detect_contacts(segments: Sequence[Segment], obj: ObjectBody) -> list[ContactPoint]:
    """One contact per link capsule closer to the object than its radius."""
    poly = WorldPolygon(obj.shape, obj.pose)
    out = []
    for seg in segments:
        hit = capsule_polygon_query(seg.a[0], seg.a[1], seg.b[0], seg.b[1], seg.radius, poly)
        if hit is not None:
            depth, nx, ny, px, py = hit
            out.append(ContactPoint((px, py), (nx, ny), depth, seg.link_id))
    return out


def _contact_force(depth: float, nx: float, ny: float, rvx: float, rvy: float,
                   kn: float, kdc: float, kt: float, mu: float) -> tuple[float, float]:
    approach = -(rvx * nx + rvy * ny)
    fn = kn * depth + kdc * approach
    if fn <= 0.0:
        return 0.0, 0.0
    slip = -rvx * ny + rvy * nx
    cap = mu * fn
    ft = kt * slip
    if ft > cap:
        ft = cap
    elif ft < -cap:
        ft = -cap
    return fn, -ft


def contact_forces(contacts: Sequence[ContactPoint], rel_velocities: Sequence[Sequence[float]],
                   config: SimConfig) -> list[tuple[float, float]]:
    """Spring-damper normal force and Coulomb-clamped viscous tangential force.

    rel_velocities are link-point minus object-point velocities; the tangent
    direction is the normal rotated by +90 degrees. Forces act on the link.
    """
    if len(contacts) != len(rel_velocities):
        raise ConfigError("one relative velocity per contact is required")
    return [
        _contact_force(c.depth, c.normal[0], c.normal[1], float(v[0]), float(v[1]),
                       config.kn, config.kd_contact, config.kt, config.mu)
        for c, v in zip(contacts, rel_velocities)
    ]


def pd_torques(hand: HandState, targets: Sequence[float], config: SimConfig,
               groups: Sequence[int]) -> np.ndarray:
    """Saturated PD effort per actuated DoF."""
    targets = np.asarray(targets, dtype=float)
    kp = np.array([config.kp[g] for g in groups])
    kd = np.array([config.kd[g] for g in groups])
    cap = np.array([config.tau_max[g] for g in groups])
    return np.clip(kp * (targets - hand.pos) - kd * hand.vel, -cap, cap)


class Simulator:
    """Steps a WorldState for a fixed hand description and configuration.

    Holds no per-world state; one instance can step any number of worlds.
    """

    def __init__(self, hand: HandSpec, config: SimConfig):
        self.hand = hand
        self.config = config
        self.groups = hand.dof_groups
        self.limits = hand.dof_limits
        self._kp = [config.kp[g] for g in self.groups]
        self._kd = [config.kd[g] for g in self.groups]
        self._cap = [config.tau_max[g] for g in self.groups]
        self._inv_inertia = [1.0 / config.drive_inertia[g] for g in self.groups]

    @property
    def n_dof(self) -> int:
        return self.hand.n_dof

    def initial_world(self, obj: ObjectBody, base: Pose2, q: Sequence[float]) -> WorldState:
        q = [float(v) for v in q]
        if len(q) != self.hand.n_joints:
            raise ConfigError(f"expected {self.hand.n_joints} joint angles, got {len(q)}")
        pos = np.array([base.x, base.y, base.theta] + q)
        hand = HandState(pos, np.zeros_like(pos), pos.copy())
        world = WorldState(obj, hand, 0.0, [], np.zeros_like(pos), False)
        segs, _, _ = _fk_raw(self.hand, base.x, base.y, base.theta, q)
        world.contacts = detect_contacts(
            [Segment((s[0], s[1]), (s[2], s[3]), s[4], s[5]) for s in segs], obj)
        world.touched = bool(world.contacts)
        return world

    def step(self, world: WorldState, targets: Sequence[float]) -> WorldState:
        """Advance one control tick; returns a new WorldState."""
        cfg = self.config
        n = self.n_dof
        if len(targets) != n:
            raise ConfigError(f"expected {n} targets, got {len(targets)}")
        tgt = [float(v) for v in targets]
        pos = world.hand.pos.tolist()
        vel = world.hand.vel.tolist()
        obj = world.object
        shape = obj.shape
        ox, oy, oth = obj.pose.x, obj.pose.y, obj.pose.theta
        ovx, ovy, oom = obj.velocity
        inv_m = 1.0 / obj.mass
        inv_i = 1.0 / obj.inertia
        decay = 1.0 / (1.0 + cfg.dt * obj.damping * inv_m)
        v_th = obj.stiction_speed
        omega_th = v_th / math.sqrt(obj.inertia * inv_m)
        dt = cfg.dt
        kn, kdc, kt, mu = cfg.kn, cfg.kd_contact, cfg.kt, cfg.mu
        kp, kd, cap, inv_inertia, limits = self._kp, self._kd, self._cap, self._inv_inertia, self.limits
        hand = self.hand

        effort = [0.0] * n
        contacts: list[ContactPoint] = []
        touched = False
        for _ in range(cfg.substeps_per_control):
            x, y, th = pos[0], pos[1], pos[2]
            segs, chains, _ = _fk_raw(hand, x, y, th, pos[3:])
            poly = WorldPolygon(shape, Pose2(ox, oy, oth))

            for i in range(n):
                e = kp[i] * (tgt[i] - pos[i]) - kd[i] * vel[i]
                effort[i] = cap[i] if e > cap[i] else (-cap[i] if e < -cap[i] else e)

            ext = [0.0] * n
            fox = foy = tau_o = 0.0
            contacts = []
            for ax, ay, bx, by, r, link_id in segs:
                hit = capsule_polygon_query(ax, ay, bx, by, r, poly)
                if hit is None:
                    continue
                depth, nx, ny, px, py = hit
                # link point velocity from the base and every joint up the chain
                rx, ry = px - x, py - y
                lvx = vel[0] - vel[2] * ry
                lvy = vel[1] + vel[2] * rx
                chain = chains.get(link_id, ()) if link_id != PALM_LINK else ()
                for dof, jx, jy in chain:
                    lvx -= vel[dof] * (py - jy)
                    lvy += vel[dof] * (px - jx)
                cvx = ovx - oom * (py - oy)
                cvy = ovy + oom * (px - ox)
                fn, ft = _contact_force(depth, nx, ny, lvx - cvx, lvy - cvy, kn, kdc, kt, mu)
                contacts.append(ContactPoint((px, py), (nx, ny), depth, link_id, fn, ft))
                if fn == 0.0:
                    continue
                # force on the link, tangent t = (-ny, nx)
                fx = fn * nx - ft * ny
                fy = fn * ny + ft * nx
                ext[0] += fx
                ext[1] += fy
                ext[2] += rx * fy - ry * fx
                for dof, jx, jy in chain:
                    ext[dof] += (px - jx) * fy - (py - jy) * fx
                fox -= fx
                foy -= fy
                tau_o -= (px - ox) * fy - (py - oy) * fx
            if contacts:
                touched = True

            for i in range(n):
                v = vel[i] + dt * (effort[i] + ext[i]) * inv_inertia[i]
                p = pos[i] + dt * v
                lo, hi = limits[i]
                if p < lo:
                    p, v = lo, (v if v > 0.0 else 0.0)
                elif p > hi:
                    p, v = hi, (v if v < 0.0 else 0.0)
                pos[i], vel[i] = p, v
            pos[2] = wrap_angle(pos[2])

            ovx = (ovx + dt * fox * inv_m) * decay
            ovy = (ovy + dt * foy * inv_m) * decay
            oom = (oom + dt * tau_o * inv_i) * decay
            if math.hypot(ovx, ovy) < v_th:
                ovx = ovy = 0.0
            if abs(oom) < omega_th:
                oom = 0.0
            ox += dt * ovx
            oy += dt * ovy
            oth = wrap_angle(oth + dt * oom)

        state = pos + vel + [ox, oy, oth, ovx, ovy, oom]
        if not all(math.isfinite(v) for v in state):
            raise SimulationDiverged(f"non-finite state at t={world.time:.4f}")
        new_obj = replace(obj, pose=Pose2(ox, oy, oth), velocity=(ovx, ovy, oom))
        new_hand = HandState(np.array(pos), np.array(vel), np.array(tgt))
        steps = cfg.substeps_per_control
        return WorldState(new_obj, new_hand, world.time + steps * dt, contacts,
                          np.array(effort), touched)


def step(world: WorldState, targets: Sequence[float], hand: HandSpec,
         config: SimConfig) -> WorldState:
    return Simulator(hand, config).step(world, targets)
