import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torquegrasp.errors import ConfigError
from torquegrasp.sim import (
    ContactPoint,
    FingerSpec,
    HandSpec,
    HandState,
    LinkSpec,
    Pose2,
    SimConfig,
    Simulator,
    contact_forces,
    forward_kinematics,
    pd_torques,
    scene_from_dict,
    scene_to_dict,
)

WIDE = (-10.0, 10.0)


def one_link_hand(length=1.0):
    return HandSpec(base_limits=(WIDE, WIDE, WIDE),
                    fingers=(FingerSpec((0.0, 0.0), (LinkSpec(length, 0.01, (-4.0, 4.0)),)),),
                    palm_polygon=((-0.1, -0.01), (0.1, -0.01), (0.1, 0.01), (-0.1, 0.01)),
                    palm_reference=(0.0, 0.01))


def test_fk_zero_angle():
    k = forward_kinematics(one_link_hand(), Pose2(), [0.0])
    assert k.segments[0].a == (0.0, 0.0) and k.segments[0].b == (1.0, 0.0)


def test_fk_quarter_turn():
    k = forward_kinematics(one_link_hand(), Pose2(), [math.pi / 2])
    b = k.segments[0].b
    assert abs(b[0]) <= 1e-12 and abs(b[1] - 1.0) <= 1e-12


def test_fk_length_mismatch():
    with pytest.raises(ConfigError):
        forward_kinematics(one_link_hand(), Pose2(), [0.0, 0.1])


def _homogeneous(x, y, th):
    c, s = math.cos(th), math.sin(th)
    return np.array([[c, -s, x], [s, c, y], [0.0, 0.0, 1.0]])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_fk_matches_transform_composition(seed):
    rng = np.random.default_rng(seed)
    fingers = []
    for _ in range(rng.integers(1, 4)):
        links = tuple(LinkSpec(float(rng.uniform(0.01, 0.1)), 0.005, (-3.0, 3.0))
                      for _ in range(rng.integers(1, 4)))
        fingers.append(FingerSpec(tuple(rng.uniform(-0.05, 0.05, 2)), links,
                                  float(rng.uniform(-math.pi, math.pi))))
    spec = HandSpec((WIDE, WIDE, WIDE), tuple(fingers),
                    ((-0.06, -0.01), (0.06, -0.01), (0.06, 0.01), (-0.06, 0.01)), (0.0, 0.01))
    base = Pose2(*rng.uniform(-0.5, 0.5, 2), float(rng.uniform(-3, 3)))
    q = rng.uniform(-3.0, 3.0, spec.n_joints)
    k = forward_kinematics(spec, base, q)
    T_base = _homogeneous(base.x, base.y, base.theta)
    idx = 0
    seg = 0
    for f in spec.fingers:
        T = T_base @ _homogeneous(f.attach[0], f.attach[1], f.attach_angle)
        for link in f.links:
            T = T @ _homogeneous(0.0, 0.0, q[idx])
            start = T @ np.array([0.0, 0.0, 1.0])
            T = T @ _homogeneous(link.length, 0.0, 0.0)
            end = T @ np.array([0.0, 0.0, 1.0])
            s = k.segments[seg]
            assert max(abs(s.a[0] - start[0]), abs(s.a[1] - start[1])) <= 1e-9
            assert max(abs(s.b[0] - end[0]), abs(s.b[1] - end[1])) <= 1e-9
            idx += 1
            seg += 1
    palm = T_base @ np.array([0.0, 0.01, 1.0])
    assert max(abs(k.palm_point[0] - palm[0]), abs(k.palm_point[1] - palm[1])) <= 1e-12


def test_contact_force_spring():
    cfg = SimConfig(kn=1000.0)
    c = ContactPoint((0, 0), (0.0, 1.0), 0.01, 0)
    fn, ft = contact_forces([c], [(0.0, 0.0)], cfg)[0]
    assert math.isclose(fn, 10.0) and ft == 0.0


def test_contact_force_cone_clamp():
    cfg = SimConfig(kn=1000.0, mu=0.5, kt=1000.0, kd_contact=1e-9)
    c = ContactPoint((0, 0), (0.0, 1.0), 0.01, 0)
    # tangent t = (-ny, nx) = (-1, 0); slip 0.02 m/s along t demands 20 N
    fn, ft = contact_forces([c], [(-0.02, 0.0)], cfg)[0]
    assert math.isclose(fn, 10.0) and math.isclose(ft, -5.0)
    fn, ft = contact_forces([c], [(0.02, 0.0)], cfg)[0]
    assert math.isclose(ft, 5.0)


def test_contact_force_zero():
    c = ContactPoint((0, 0), (1.0, 0.0), 0.0, 0)
    assert contact_forces([c], [(0.0, 0.0)], SimConfig()) == [(0.0, 0.0)]


@given(st.floats(0, 0.02), st.floats(-1, 1), st.floats(-1, 1), st.floats(-math.pi, math.pi))
def test_contact_force_cone_property(depth, vx, vy, ang):
    cfg = SimConfig()
    c = ContactPoint((0, 0), (math.cos(ang), math.sin(ang)), depth, 0)
    fn, ft = contact_forces([c], [(vx, vy)], cfg)[0]
    assert fn >= 0.0
    assert abs(ft) <= cfg.mu * fn + 1e-9


def test_pd_torques_examples():
    groups = [2]
    hand = HandState(np.array([0.3]), np.array([0.0]), np.array([0.3]))
    assert pd_torques(hand, [0.3], SimConfig(), groups)[0] == 0.0
    cfg = SimConfig(kp=(1, 1, 10.0), kd=(1, 1, 1e-12), tau_max=(1, 1, 1.0))
    hand = HandState(np.array([0.0]), np.array([0.0]), np.array([0.0]))
    assert pd_torques(hand, [0.2], cfg, groups)[0] == 1.0


def test_static_equilibrium_against_fixed_obstacle(scene):
    # a very heavy object: the palm presses on it and the base settles where kp*e balances contact
    obj = replace(scene.object, mass=1e6, inertia=1e3, damping=1e6)
    sim = Simulator(scene.hand, scene.sim)
    q = [0.6, 0.2, -0.6, -0.2]   # fingers open, only the palm touches
    base = Pose2(0.0, -0.0405 - 0.0001, 0.0)
    world = sim.initial_world(obj, base, q)
    targets = np.array([0.0, -0.0405 + 0.001, 0.0] + q)  # 1.1 mm past touching
    for _ in range(150):
        world = sim.step(world, targets)
    effort_y = world.sensed_torques[1]
    e = targets[1] - world.hand.pos[1]
    kp = scene.sim.kp[0]
    assert abs(world.hand.vel[1]) < 1e-6
    assert math.isclose(effort_y, kp * e, rel_tol=1e-3)
    fy = sum(-(c.normal_force * c.normal[1] - c.tangent_force * c.normal[0])
             for c in world.contacts)
    assert world.contacts and effort_y > 0.1
    assert abs(effort_y - fy) <= 0.05 * abs(effort_y)


def far_world(scene, velocity=(0.0, 0.0, 0.0), substeps=None):
    cfg = scene.sim if substeps is None else replace(scene.sim, substeps_per_control=substeps)
    sim = Simulator(scene.hand, cfg)
    obj = replace(scene.object, velocity=velocity)
    q = [0.6, 0.2, -0.6, -0.2]
    world = sim.initial_world(obj, Pose2(0.0, -0.12, 0.0), q)
    return sim, world


def test_rest_stability_exact(scene):
    sim, world = far_world(scene)
    pose0 = world.object.pose
    for _ in range(50):
        world = sim.step(world, world.hand.targets)
        assert world.object.pose == pose0
        assert world.object.velocity == (0.0, 0.0, 0.0)


def test_pure_damping_decreases_to_zero(scene):
    sim, world = far_world(scene, velocity=(0.1, 0.0, 0.0), substeps=1)
    speeds = [0.1]
    for _ in range(5000):
        world = sim.step(world, world.hand.targets)
        v = math.hypot(*world.object.velocity[:2])
        if speeds[-1] > 0.0:
            assert v < speeds[-1]
        speeds.append(v)
        if v == 0.0:
            break
    assert speeds[-1] == 0.0


def test_bitwise_determinism(scene):
    def run():
        rng = np.random.default_rng(5)
        sim = Simulator(scene.hand, scene.sim)
        world = sim.initial_world(scene.object, Pose2(0.0, -0.0705, 0.0), [0.6, 0.2, -0.6, -0.2])
        out = []
        lims = np.array(scene.hand.dof_limits)
        for _ in range(200):
            targets = rng.uniform(lims[:, 0], lims[:, 1])
            world = sim.step(world, targets)
            out.append(np.concatenate([world.hand.pos, world.hand.vel, world.sensed_torques,
                                       world.object.pose.as_tuple(), world.object.velocity]))
        return np.array(out)
    a, b = run(), run()
    assert a.tobytes() == b.tobytes()


def test_targets_length_checked(scene):
    sim, world = far_world(scene)
    with pytest.raises(ConfigError):
        sim.step(world, [0.0, 0.0])


def test_scene_roundtrip_and_unknown_keys(scene):
    d = scene_to_dict(scene)
    assert scene_to_dict(scene_from_dict(d)) == d
    bad = scene_to_dict(scene)
    bad["object"]["colour"] = "red"
    with pytest.raises(ConfigError):
        scene_from_dict(bad)
    bad = scene_to_dict(scene)
    bad["sim"]["kn"] = -1.0
    with pytest.raises(ConfigError):
        scene_from_dict(bad)
