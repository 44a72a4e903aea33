"""Scene description types and their JSON loading."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from torquegrasp.errors import ConfigError
from torquegrasp.sim.geometry import Pose2, validate_convex_polygon

# DoF groups index the per-group gain/saturation triples in SimConfig.
GROUP_TRANSLATION, GROUP_ROTATION, GROUP_FINGER = 0, 1, 2
PALM_LINK = -1


def strict_keys(data: Mapping[str, Any], where: str, required: Sequence[str],
                optional: Sequence[str] = ()) -> None:
    """Reject unknown keys and report missing ones."""
    if not isinstance(data, Mapping):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    unknown = set(data) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = [k for k in required if k not in data]
    if missing:
        raise ConfigError(f"{where}: missing keys {missing}")


def _pair(value: Any, where: str) -> tuple[float, float]:
    try:
        a, b = value
        return float(a), float(b)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a pair of numbers") from None


def _triple(value: Any, where: str) -> tuple[float, float, float]:
    try:
        a, b, c = value
        return float(a), float(b), float(c)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected three numbers") from None


@dataclass(frozen=True)
class LinkSpec:
    length: float
    radius: float
    limits: tuple[float, float]

    def __post_init__(self) -> None:
        if not self.length > 0.0:
            raise ConfigError(f"link length must be > 0, got {self.length}")
        if not self.radius > 0.0:
            raise ConfigError(f"link radius must be > 0, got {self.radius}")
        lo, hi = self.limits
        if not lo < hi:
            raise ConfigError(f"joint limits need lo < hi, got {self.limits}")


@dataclass(frozen=True)
class FingerSpec:
    attach: tuple[float, float]
    links: tuple[LinkSpec, ...]
    # heading (body frame) of the first link at zero joint angle
    attach_angle: float = 0.0

    def __post_init__(self) -> None:
        if not self.links:
            raise ConfigError("a finger needs at least one link")


@dataclass(frozen=True)
class HandSpec:
    base_limits: tuple[tuple[float, float], tuple[float, float], tuple[float, float]]
    fingers: tuple[FingerSpec, ...]
    palm_polygon: tuple[tuple[float, float], ...]
    palm_reference: tuple[float, float]

    def __post_init__(self) -> None:
        if not self.fingers:
            raise ConfigError("hand needs at least one finger")
        for lo, hi in self.base_limits:
            if not lo < hi:
                raise ConfigError(f"base limits need lo < hi, got {(lo, hi)}")
        validate_convex_polygon(self.palm_polygon)

    @property
    def n_joints(self) -> int:
        return sum(len(f.links) for f in self.fingers)

    @property
    def n_dof(self) -> int:
        return 3 + self.n_joints

    @property
    def joint_limits(self) -> list[tuple[float, float]]:
        return [link.limits for f in self.fingers for link in f.links]

    @property
    def dof_limits(self) -> list[tuple[float, float]]:
        return list(self.base_limits) + self.joint_limits

    @property
    def dof_groups(self) -> list[int]:
        return [GROUP_TRANSLATION, GROUP_TRANSLATION, GROUP_ROTATION] + [GROUP_FINGER] * self.n_joints

    def palm_capsule(self) -> tuple[tuple[float, float], tuple[float, float], float]:
        """Collision capsule for the palm: its long axis through the polygon's mid-height.

        The palm polygon is taken to be elongated along body x.
        """
        xs = [p[0] for p in self.palm_polygon]
        ys = [p[1] for p in self.palm_polygon]
        half = 0.5 * (max(ys) - min(ys))
        ym = 0.5 * (max(ys) + min(ys))
        return (min(xs) + half, ym), (max(xs) - half, ym), half


@dataclass
class ObjectBody:
    shape: tuple[tuple[float, float], ...]
    pose: Pose2
    velocity: tuple[float, float, float]
    mass: float
    inertia: float
    damping: float
    stiction_speed: float

    def __post_init__(self) -> None:
        if not self.mass > 0.0:
            raise ConfigError(f"object mass must be > 0, got {self.mass}")
        if not self.inertia > 0.0:
            raise ConfigError(f"object inertia must be > 0, got {self.inertia}")
        if self.damping < 0.0 or self.stiction_speed < 0.0:
            raise ConfigError("table friction parameters must be >= 0")
        validate_convex_polygon(self.shape)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    substeps_per_control: int = 20
    kn: float = 5000.0
    kd_contact: float = 50.0
    mu: float = 0.6
    # viscous tangential coefficient before the Coulomb clamp
    kt: float = 20.0
    kp: tuple[float, float, float] = (200.0, 50.0, 100.0)
    kd: tuple[float, float, float] = (20.0, 5.0, 5.0)
    tau_max: tuple[float, float, float] = (50.0, 20.0, 5.0)
    # reflected drive inertia per DoF group (kg, kg m^2, kg m^2)
    drive_inertia: tuple[float, float, float] = (0.5, 0.02, 0.01)

    def __post_init__(self) -> None:
        scalars = {"dt": self.dt, "kn": self.kn, "kd_contact": self.kd_contact,
                   "mu": self.mu, "kt": self.kt}
        for name, value in scalars.items():
            if not value > 0.0:
                raise ConfigError(f"sim.{name} must be > 0, got {value}")
        if int(self.substeps_per_control) != self.substeps_per_control or self.substeps_per_control < 1:
            raise ConfigError("sim.substeps_per_control must be an integer >= 1")
        for name in ("kp", "kd", "tau_max", "drive_inertia"):
            values = getattr(self, name)
            if len(values) != 3 or not all(v > 0.0 for v in values):
                raise ConfigError(f"sim.{name} must be three positive numbers")

    @property
    def control_dt(self) -> float:
        return self.dt * self.substeps_per_control


@dataclass
class ContactPoint:
    position: tuple[float, float]
    normal: tuple[float, float]
    depth: float
    link_id: int
    normal_force: float = 0.0
    tangent_force: float = 0.0


@dataclass
class HandState:
    """Actuated DoF in the order (base x, base y, base theta, finger joints...)."""

    pos: np.ndarray
    vel: np.ndarray
    targets: np.ndarray

    @property
    def base_pose(self) -> Pose2:
        return Pose2(float(self.pos[0]), float(self.pos[1]), float(self.pos[2]))

    @property
    def q(self) -> np.ndarray:
        return self.pos[3:]

    @property
    def qdot(self) -> np.ndarray:
        return self.vel[3:]

    def copy(self) -> "HandState":
        return HandState(self.pos.copy(), self.vel.copy(), self.targets.copy())


@dataclass
class WorldState:
    object: ObjectBody
    hand: HandState
    time: float = 0.0
    contacts: list[ContactPoint] = field(default_factory=list)
    sensed_torques: np.ndarray | None = None
    # any contact during the last control step's substeps
    touched: bool = False

    def copy(self) -> "WorldState":
        return WorldState(replace(self.object), self.hand.copy(), self.time,
                          [replace(c) for c in self.contacts],
                          None if self.sensed_torques is None else self.sensed_torques.copy(),
                          self.touched)


@dataclass(frozen=True)
class Scene:
    object: ObjectBody
    hand: HandSpec
    sim: SimConfig

    def to_dict(self) -> dict:
        return scene_to_dict(self)


# ----------------------------------------------------------------- JSON I/O

def _object_from_dict(d: Mapping[str, Any]) -> ObjectBody:
    strict_keys(d, "object", ["vertices", "mass", "inertia", "table_friction"],
                ["pose", "velocity"])
    tf = d["table_friction"]
    strict_keys(tf, "object.table_friction", ["damping", "stiction_speed"])
    pose = _triple(d.get("pose", (0.0, 0.0, 0.0)), "object.pose")
    return ObjectBody(
        shape=tuple(_pair(v, "object.vertices") for v in d["vertices"]),
        pose=Pose2(*pose),
        velocity=_triple(d.get("velocity", (0.0, 0.0, 0.0)), "object.velocity"),
        mass=float(d["mass"]),
        inertia=float(d["inertia"]),
        damping=float(tf["damping"]),
        stiction_speed=float(tf["stiction_speed"]),
    )


def _hand_from_dict(d: Mapping[str, Any]) -> HandSpec:
    strict_keys(d, "hand", ["base_limits", "fingers", "palm"])
    bl = d["base_limits"]
    strict_keys(bl, "hand.base_limits", ["x", "y", "theta"])
    palm = d["palm"]
    strict_keys(palm, "hand.palm", ["polygon", "reference"])
    fingers = []
    for i, f in enumerate(d["fingers"]):
        where = f"hand.fingers[{i}]"
        strict_keys(f, where, ["attach", "links"], ["attach_angle"])
        links = []
        for j, link in enumerate(f["links"]):
            strict_keys(link, f"{where}.links[{j}]", ["length", "radius", "limits"])
            links.append(LinkSpec(float(link["length"]), float(link["radius"]),
                                  _pair(link["limits"], f"{where}.links[{j}].limits")))
        fingers.append(FingerSpec(_pair(f["attach"], f"{where}.attach"), tuple(links),
                                  float(f.get("attach_angle", 0.0))))
    return HandSpec(
        base_limits=tuple(_pair(bl[k], f"hand.base_limits.{k}") for k in ("x", "y", "theta")),
        fingers=tuple(fingers),
        palm_polygon=tuple(_pair(v, "hand.palm.polygon") for v in palm["polygon"]),
        palm_reference=_pair(palm["reference"], "hand.palm.reference"),
    )


def _sim_from_dict(d: Mapping[str, Any]) -> SimConfig:
    names = [f for f in SimConfig.__dataclass_fields__]
    strict_keys(d, "sim", [], names)
    kwargs = {}
    for k, v in d.items():
        if k in ("kp", "kd", "tau_max", "drive_inertia"):
            kwargs[k] = _triple(v, f"sim.{k}")
        elif k == "substeps_per_control":
            kwargs[k] = int(v)
        else:
            kwargs[k] = float(v)
    return SimConfig(**kwargs)


def scene_from_dict(d: Mapping[str, Any]) -> Scene:
    strict_keys(d, "scene", ["object", "hand"], ["sim"])
    return Scene(_object_from_dict(d["object"]), _hand_from_dict(d["hand"]),
                 _sim_from_dict(d.get("sim", {})))


def scene_to_dict(scene: Scene) -> dict:
    o, h = scene.object, scene.hand
    return {
        "object": {
            "vertices": [list(v) for v in o.shape],
            "pose": list(o.pose.as_tuple()),
            "velocity": list(o.velocity),
            "mass": o.mass,
            "inertia": o.inertia,
            "table_friction": {"damping": o.damping, "stiction_speed": o.stiction_speed},
        },
        "hand": {
            "base_limits": dict(zip(("x", "y", "theta"), [list(b) for b in h.base_limits])),
            "fingers": [
                {
                    "attach": list(f.attach),
                    "attach_angle": f.attach_angle,
                    "links": [{"length": l.length, "radius": l.radius, "limits": list(l.limits)}
                              for l in f.links],
                }
                for f in h.fingers
            ],
            "palm": {"polygon": [list(v) for v in h.palm_polygon],
                     "reference": list(h.palm_reference)},
        },
        "sim": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(scene.sim).items()},
    }


def load_scene(path: str | Path | None = None) -> Scene:
    """Load a scene JSON file; None loads the packaged default scene."""
    if path is None:
        from torquegrasp.data import read_default
        return scene_from_dict(read_default("scene"))
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"scene file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scene file {path} is not valid JSON: {exc}") from None
    return scene_from_dict(data)


def finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)
