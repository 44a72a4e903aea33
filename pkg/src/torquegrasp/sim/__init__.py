"""Deterministic planar simulator: PD-driven hand, free object, penalty contacts."""

from torquegrasp.sim.dynamics import Simulator, contact_forces, detect_contacts, pd_torques, step
from torquegrasp.sim.geometry import Pose2, polygon_inertia, wrap_angle
from torquegrasp.sim.kinematics import Kinematics, Segment, forward_kinematics
from torquegrasp.sim.model import (
    PALM_LINK,
    ContactPoint,
    FingerSpec,
    HandSpec,
    HandState,
    LinkSpec,
    ObjectBody,
    Scene,
    SimConfig,
    WorldState,
    load_scene,
    scene_from_dict,
    scene_to_dict,
)

__all__ = [
    "PALM_LINK", "ContactPoint", "FingerSpec", "HandSpec", "HandState", "Kinematics", "LinkSpec",
    "ObjectBody", "Pose2", "Scene", "Segment", "SimConfig", "Simulator", "WorldState",
    "contact_forces", "detect_contacts", "forward_kinematics", "load_scene", "pd_torques",
    "polygon_inertia", "scene_from_dict", "scene_to_dict", "step", "wrap_angle",
]
