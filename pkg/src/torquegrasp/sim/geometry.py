"""Planar poses and capsule/convex-polygon proximity queries.

Everything here works on plain Python floats; the simulator calls these
functions in its inner loop, where small-array numpy overhead dominates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from torquegrasp.errors import ConfigError

TWO_PI = 2.0 * math.pi

Point = tuple[float, float]


def wrap_angle(theta: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi]."""
    w = math.remainder(theta, TWO_PI)
    if w <= -math.pi:
        w += TWO_PI
    return w


@dataclass(frozen=True)
class Pose2:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def apply(self, p: Sequence[float]) -> Point:
        """Map a body-frame point to the parent frame."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return (self.x + c * p[0] - s * p[1], self.y + s * p[0] + c * p[1])

    def apply_inverse(self, p: Sequence[float]) -> Point:
        """Map a parent-frame point into this pose's body frame."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        dx, dy = p[0] - self.x, p[1] - self.y
        return (c * dx + s * dy, -s * dx + c * dy)

    def compose(self, other: "Pose2") -> "Pose2":
        """Return self * other (other expressed in self's frame)."""
        x, y = self.apply((other.x, other.y))
        return Pose2(x, y, self.theta + other.theta)

    def inverse(self) -> "Pose2":
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2(-(c * self.x + s * self.y), s * self.x - c * self.y, -self.theta)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.theta)


def polygon_area(vertices: Sequence[Sequence[float]]) -> float:
    """Signed shoelace area; positive for counterclockwise order."""
    n = len(vertices)
    acc = 0.0
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        acc += x0 * y1 - x1 * y0
    return 0.5 * acc


def validate_convex_polygon(vertices: Sequence[Sequence[float]]) -> None:
    """Raise ConfigError unless vertices form a CCW, strictly convex polygon."""
    n = len(vertices)
    if n < 3:
        raise ConfigError(f"polygon needs at least 3 vertices, got {n}")
    if not polygon_area(vertices) > 0.0:
        raise ConfigError("polygon must be counterclockwise with positive area")
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        x2, y2 = vertices[(i + 2) % n]
        cross = (x1 - x0) * (y2 - y1) - (y1 - y0) * (x2 - x1)
        if not cross > 0.0:
            raise ConfigError(f"polygon is not strictly convex at vertex {(i + 1) % n}")


def polygon_inertia(vertices: Sequence[Sequence[float]], mass: float) -> float:
    """Polar moment of inertia about the body origin for a uniform lamina."""
    n = len(vertices)
    num = 0.0
    den = 0.0
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        cross = x0 * y1 - x1 * y0
        num += cross * (x0 * x0 + x0 * x1 + x1 * x1 + y0 * y0 + y0 * y1 + y1 * y1)
        den += cross
    return mass * num / (6.0 * den)


def closest_point_on_segment(px: float, py: float, ax: float, ay: float,
                             bx: float, by: float) -> tuple[float, float, float]:
    """Closest point on segment ab to p, returned as (x, y, squared distance)."""
    abx, aby = bx - ax, by - ay
    denom = abx * abx + aby * aby
    if denom > 0.0:
        t = ((px - ax) * abx + (py - ay) * aby) / denom
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
    else:
        t = 0.0
    cx, cy = ax + t * abx, ay + t * aby
    dx, dy = px - cx, py - cy
    return cx, cy, dx * dx + dy * dy


class WorldPolygon:
    """A convex polygon placed in the world, with cached edge normals."""

    __slots__ = ("xs", "ys", "nx", "ny", "d", "cx", "cy", "bound")

    def __init__(self, vertices: Sequence[Sequence[float]], pose: Pose2):
        c, s = math.cos(pose.theta), math.sin(pose.theta)
        self.xs = [pose.x + c * vx - s * vy for vx, vy in vertices]
        self.ys = [pose.y + s * vx + c * vy for vx, vy in vertices]
        n = len(self.xs)
        self.nx, self.ny, self.d = [], [], []
        for i in range(n):
            ex = self.xs[(i + 1) % n] - self.xs[i]
            ey = self.ys[(i + 1) % n] - self.ys[i]
            length = math.hypot(ex, ey)
            # outward normal of a CCW edge
            nx, ny = ey / length, -ex / length
            self.nx.append(nx)
            self.ny.append(ny)
            self.d.append(nx * self.xs[i] + ny * self.ys[i])
        self.cx, self.cy = pose.x, pose.y
        self.bound = max(math.hypot(vx, vy) for vx, vy in vertices)


def capsule_polygon_query(ax: float, ay: float, bx: float, by: float, radius: float,
                          poly: WorldPolygon):
    """Proximity between a capsule (axis ab, radius) and a convex polygon.

    Returns None when the capsule surface is farther than its radius from the
    polygon, else (depth, nx, ny, px, py) where n points from the polygon
    toward the capsule axis and p lies on the polygon surface. Depth equals
    radius minus the signed axis distance (negative when the axis penetrates).
    """
    # broad phase on the polygon's bounding circle
    _, _, d2c = closest_point_on_segment(poly.cx, poly.cy, ax, ay, bx, by)
    reach = poly.bound + radius
    if d2c >= reach * reach:
        return None

    xs, ys, nxs, nys, ds = poly.xs, poly.ys, poly.nx, poly.ny, poly.d
    n = len(xs)

    # separating-axis test of the bare axis segment against the polygon
    overlap = True
    best_push = math.inf
    best = None
    for k in range(n):
        pa = nxs[k] * ax + nys[k] * ay
        pb = nxs[k] * bx + nys[k] * by
        lo = pa if pa < pb else pb
        push = ds[k] - lo
        if push <= 0.0:
            overlap = False
            break
        if push < best_push:
            best_push = push
            if pa < pb:
                best = (nxs[k], nys[k], ax + nxs[k] * push, ay + nys[k] * push)
            else:
                best = (nxs[k], nys[k], bx + nxs[k] * push, by + nys[k] * push)
    if overlap:
        sx, sy = bx - ax, by - ay
        slen = math.hypot(sx, sy)
        if slen > 0.0:
            mx, my = -sy / slen, sx / slen
            s0 = mx * ax + my * ay
            pmin, pmax = math.inf, -math.inf
            imin = imax = 0
            for k in range(n):
                v = mx * xs[k] + my * ys[k]
                if v < pmin:
                    pmin, imin = v, k
                if v > pmax:
                    pmax, imax = v, k
            if pmax <= s0 or pmin >= s0:
                overlap = False
            else:
                # push the axis along +m (clear pmax) or -m (clear pmin)
                if pmax - s0 < best_push:
                    best_push = pmax - s0
                    best = (mx, my, xs[imax], ys[imax])
                if s0 - pmin < best_push:
                    best_push = s0 - pmin
                    best = (-mx, -my, xs[imin], ys[imin])
    if overlap:
        nx, ny, px, py = best
        return radius + best_push, nx, ny, px, py

    # separated axis: in 2D the closest pair involves an endpoint of one segment
    best_d2 = math.inf
    seg_pt = poly_pt = (0.0, 0.0)
    feature = (0, False)
    for k in range(n):
        x0, y0 = xs[k], ys[k]
        x1, y1 = xs[(k + 1) % n], ys[(k + 1) % n]
        cx, cy, d2 = closest_point_on_segment(ax, ay, x0, y0, x1, y1)
        if d2 < best_d2:
            best_d2, seg_pt, poly_pt, feature = d2, (ax, ay), (cx, cy), (k, False)
        cx, cy, d2 = closest_point_on_segment(bx, by, x0, y0, x1, y1)
        if d2 < best_d2:
            best_d2, seg_pt, poly_pt, feature = d2, (bx, by), (cx, cy), (k, False)
        cx, cy, d2 = closest_point_on_segment(x0, y0, ax, ay, bx, by)
        if d2 < best_d2:
            best_d2, seg_pt, poly_pt, feature = d2, (cx, cy), (x0, y0), (k, True)
    if best_d2 >= radius * radius:
        return None
    dist = math.sqrt(best_d2)
    if dist > 1e-12:
        nx = (seg_pt[0] - poly_pt[0]) / dist
        ny = (seg_pt[1] - poly_pt[1]) / dist
    else:
        k, is_vertex = feature
        if is_vertex:
            nx, ny = nxs[k] + nxs[k - 1], nys[k] + nys[k - 1]
            norm = math.hypot(nx, ny)
            nx, ny = nx / norm, ny / norm
        else:
            nx, ny = nxs[k], nys[k]
    return radius - dist, nx, ny, poly_pt[0], poly_pt[1]
