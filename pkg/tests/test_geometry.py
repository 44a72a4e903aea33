import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from shapely.geometry import LineString, Point, Polygon

from torquegrasp.errors import ConfigError
from torquegrasp.sim.geometry import (
    Pose2,
    WorldPolygon,
    capsule_polygon_query,
    closest_point_on_segment,
    polygon_area,
    polygon_inertia,
    validate_convex_polygon,
    wrap_angle,
)

finite = st.floats(-50.0, 50.0, allow_nan=False)
coord = st.floats(-0.2, 0.2, allow_nan=False)


def hexagon(r=0.06 / math.sqrt(3)):
    return [(r * math.cos(math.pi / 3 * k), r * math.sin(math.pi / 3 * k)) for k in range(6)]


@given(finite)
def test_wrap_angle_range_and_equivalence(theta):
    w = wrap_angle(theta)
    assert -math.pi < w <= math.pi
    assert math.isclose(math.sin(w), math.sin(theta), abs_tol=1e-9)
    assert math.isclose(math.cos(w), math.cos(theta), abs_tol=1e-9)


def test_wrap_angle_boundaries():
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(0.0) == 0.0


@given(coord, coord, finite, coord, coord, finite)
def test_pose_compose_inverse(x1, y1, t1, x2, y2, t2):
    a, b = Pose2(x1, y1, t1), Pose2(x2, y2, t2)
    p = (0.013, -0.021)
    ab = a.compose(b)
    q1 = ab.apply(p)
    q2 = a.apply(b.apply(p))
    assert math.isclose(q1[0], q2[0], abs_tol=1e-12)
    assert math.isclose(q1[1], q2[1], abs_tol=1e-12)
    back = a.inverse().apply(a.apply(p))
    assert math.isclose(back[0], p[0], abs_tol=1e-12) and math.isclose(back[1], p[1], abs_tol=1e-12)
    inv = a.apply_inverse(a.apply(p))
    assert math.isclose(inv[0], p[0], abs_tol=1e-12)


def test_polygon_validation():
    validate_convex_polygon(hexagon())
    with pytest.raises(ConfigError):
        validate_convex_polygon(list(reversed(hexagon())))  # clockwise
    with pytest.raises(ConfigError):
        validate_convex_polygon([(0, 0), (1, 0), (2, 0)])  # degenerate
    with pytest.raises(ConfigError):
        validate_convex_polygon([(0, 0), (2, 0), (1, 0.2), (2, 2), (0, 2)])  # reflex vertex


def test_polygon_area_and_inertia_square():
    sq = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)]
    assert math.isclose(polygon_area(sq), 1.0)
    # uniform square about its centre: m (a^2 + b^2) / 12
    assert math.isclose(polygon_inertia(sq, 3.0), 3.0 * 2.0 / 12.0)


def test_closest_point_on_segment():
    cx, cy, d2 = closest_point_on_segment(0.5, 1.0, 0.0, 0.0, 1.0, 0.0)
    assert (cx, cy, d2) == (0.5, 0.0, 1.0)
    cx, cy, d2 = closest_point_on_segment(-1.0, 0.0, 0.0, 0.0, 1.0, 0.0)
    assert (cx, cy, d2) == (0.0, 0.0, 1.0)


def test_separated_returns_none():
    poly = WorldPolygon(hexagon(), Pose2())
    assert capsule_polygon_query(1.0, -0.1, 1.0, 0.1, 0.01, poly) is None


def test_parallel_to_edge_depth():
    # flat edge of the default hexagon at y = 0.03; axis at y = 0.07, radius 0.05
    poly = WorldPolygon(hexagon(), Pose2())
    top = max(poly.ys)
    assert math.isclose(top, 0.03)
    hit = capsule_polygon_query(-0.015, top + 0.04, 0.015, top + 0.04, 0.05, poly)
    assert hit is not None
    depth, nx, ny, px, py = hit
    assert abs(depth - 0.01) <= 1e-9
    assert abs(nx) < 1e-9 and abs(ny - 1.0) < 1e-9


def test_vertex_region_normal():
    poly = WorldPolygon(hexagon(), Pose2())
    vx, vy = poly.xs[0], poly.ys[0]  # vertex on +x axis
    a, b = (vx + 0.01, vy + 0.004), (vx + 0.01, vy + 0.03)
    hit = capsule_polygon_query(*a, *b, 0.02, poly)
    assert hit is not None
    depth, nx, ny, px, py = hit
    cx, cy, d2 = closest_point_on_segment(vx, vy, *a, *b)
    d = math.sqrt(d2)
    assert math.isclose(nx, (cx - vx) / d, abs_tol=1e-9)
    assert math.isclose(ny, (cy - vy) / d, abs_tol=1e-9)
    assert math.isclose(depth, 0.02 - d, abs_tol=1e-12)
    assert (px, py) == (vx, vy)


@settings(max_examples=300, deadline=None)
@given(coord, coord, coord, coord, st.floats(0.002, 0.03), st.floats(-math.pi, math.pi))
def test_separated_depth_matches_shapely(ax, ay, bx, by, radius, theta):
    poly = WorldPolygon(hexagon(), Pose2(0.01, -0.02, theta))
    shape = Polygon(list(zip(poly.xs, poly.ys)))
    axis = LineString([(ax, ay), (bx, by)]) if (ax, ay) != (bx, by) else Point(ax, ay)
    dist = shape.distance(axis)
    hit = capsule_polygon_query(ax, ay, bx, by, radius, poly)
    if dist >= radius:
        assert hit is None or abs(hit[0]) < 1e-12
        return
    assert hit is not None
    depth, nx, ny, px, py = hit
    assert math.isclose(math.hypot(nx, ny), 1.0, abs_tol=1e-9)
    if dist > 1e-9:
        assert math.isclose(depth, radius - dist, abs_tol=1e-9)
        # the contact point lies on the polygon boundary
        assert shape.exterior.distance(Point(px, py)) < 1e-9
    else:
        # axis inside the polygon: depth exceeds the radius
        assert depth >= radius - 1e-12
