"""Planar geometry for oriented boxes.

Points are ``(x, y)`` pairs in image pixels with y pointing down. Orientation
words (counter-clockwise, signed area) are read in the y-up math frame, i.e.
a polygon with positive shoelace area is "counter-clockwise" here even though
it appears clockwise on screen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateInput

EPS = 1e-9


def as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) array of points, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    return pts


def signed_area(poly) -> float:
    """Shoelace area; positive for counter-clockwise order, 0 when degenerate."""
    pts = np.asarray(poly, dtype=float)
    if len(pts) < 3:
        return 0.0
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _turns_left(o, a, b) -> bool:
    # b strictly left of the directed line o->a, measured as a distance in pixels
    length = math.hypot(a[0] - o[0], a[1] - o[1])
    return _cross(o, a, b) > EPS * max(length, 1.0)


def convex_hull(points) -> np.ndarray:
    """Convex hull in counter-clockwise order (Andrew's monotone chain).

    Duplicates and collinear boundary points are dropped. Raises
    :class:`DegenerateInput` when fewer than three non-collinear points remain.
    """
    pts = as_points(points)
    uniq = sorted(set(map(tuple, pts.tolist())))
    if len(uniq) < 3:
        raise DegenerateInput("convex hull needs at least 3 distinct points")

    lower: list[tuple[float, float]] = []
    for p in uniq:
        while len(lower) >= 2 and not _turns_left(lower[-2], lower[-1], p):
            lower.pop()
        lower.append(p)
    upper: list[tuple[float, float]] = []
    for p in reversed(uniq):
        while len(upper) >= 2 and not _turns_left(upper[-2], upper[-1], p):
            upper.pop()
        upper.append(p)

    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateInput("all points are collinear")
    return np.array(hull, dtype=float)


def _ccw(poly: np.ndarray) -> np.ndarray:
    return poly if signed_area(poly) >= 0 else poly[::-1]


def _clip(subject: list, a, b) -> list:
    """Keep the part of ``subject`` left of the directed line a->b."""
    out = []
    n = len(subject)
    if n == 0:
        return out
    ex, ey = b[0] - a[0], b[1] - a[1]

    def side(p):
        return ex * (p[1] - a[1]) - ey * (p[0] - a[0])

    prev = subject[-1]
    s_prev = side(prev)
    for cur in subject:
        s_cur = side(cur)
        if s_cur >= 0:
            if s_prev < 0:
                t = s_prev / (s_prev - s_cur)
                out.append((prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])))
            out.append(cur)
        elif s_prev >= 0:
            t = s_prev / (s_prev - s_cur)
            out.append((prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])))
        prev, s_prev = cur, s_cur
    return out


def clip_convex(a, b) -> np.ndarray:
    """Intersection polygon of two convex polygons (possibly empty)."""
    a = _ccw(as_points(a))
    b = _ccw(as_points(b))
    poly = [tuple(p) for p in a.tolist()]
    m = len(b)
    for i in range(m):
        poly = _clip(poly, b[i], b[(i + 1) % m])
        if not poly:
            break
    return np.array(poly, dtype=float).reshape(-1, 2)


def intersection_area(a, b) -> float:
    poly = clip_convex(a, b)
    if len(poly) < 3:
        return 0.0
    return abs(signed_area(poly))


@dataclass(frozen=True)
class OrientedBox:
    """A rectangle at arbitrary rotation, stored as its four corners."""

    corners: np.ndarray

    def __post_init__(self):
        c = as_points(self.corners)
        if c.shape != (4, 2):
            raise ValueError(f"an oriented box needs exactly 4 corners, got {len(c)}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "corners", c)

    @classmethod
    def from_params(cls, cx: float, cy: float, w: float, h: float, angle: float = 0.0) -> "OrientedBox":
        """Box of width ``w`` along direction ``angle`` (y-up radians) and height ``h``."""
        if w <= 0 or h <= 0:
            raise DegenerateInput("box sides must be positive")
        u = np.array([math.cos(angle), -math.sin(angle)]) * (w / 2)
        v = np.array([math.sin(angle), math.cos(angle)]) * (h / 2)
        c = np.array([cx, cy])
        return cls(np.array([c - u - v, c + u - v, c + u + v, c - u + v]))

    @property
    def center(self) -> np.ndarray:
        return self.corners.mean(axis=0)

    @property
    def sides(self) -> tuple[float, float]:
        c = self.corners
        return float(np.linalg.norm(c[1] - c[0])), float(np.linalg.norm(c[2] - c[1]))

    @property
    def area(self) -> float:
        return abs(signed_area(self.corners))

    def is_rectangle(self, rtol: float = 1e-6) -> bool:
        c = self.corners
        e = np.roll(c, -1, axis=0) - c
        scale = max(float(np.abs(e).max()), EPS)
        if abs(signed_area(c)) <= EPS:
            return False
        parallel = np.abs(e[0] + e[2]).max() <= rtol * scale and np.abs(e[1] + e[3]).max() <= rtol * scale
        square_corner = abs(float(np.dot(e[0], e[1]))) <= rtol * scale * scale
        return bool(parallel and square_corner)

    def rotated(self, angle: float, about=None) -> "OrientedBox":
        """Rotate counter-clockwise (y-up frame) by ``angle`` radians."""
        return OrientedBox(rotate_points(self.corners, angle, self.center if about is None else about))

    def translated(self, dx: float, dy: float) -> "OrientedBox":
        return OrientedBox(self.corners + np.array([dx, dy]))

    def contains(self, points, tol: float = EPS) -> np.ndarray:
        """Boolean mask of points inside the box, allowing ``tol`` pixels of slack."""
        return signed_distance_inside(self, points) >= -tol

    def __eq__(self, other):
        return isinstance(other, OrientedBox) and np.array_equal(self.corners, other.corners)

    def __hash__(self):
        return hash(self.corners.tobytes())


@dataclass(frozen=True)
class BoxParam:
    """Angle-based box description: the first edge at angle ``alpha`` in [0, pi/2) has length ``w``."""

    cx: float
    cy: float
    w: float
    h: float
    alpha: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError("w and h must be positive")
        if not 0 <= self.alpha < math.pi / 2:
            raise ValueError(f"alpha must lie in [0, pi/2), got {self.alpha}")

    def to_box(self) -> OrientedBox:
        return OrientedBox.from_params(self.cx, self.cy, self.w, self.h, self.alpha)

    @classmethod
    def from_box(cls, box: OrientedBox) -> "BoxParam":
        """90-degree representation: alpha reduced into [0, pi/2), w/h swapped accordingly."""
        c = box.corners
        cx, cy = box.center
        e = c[1] - c[0]
        ang = math.atan2(-e[1], e[0])
        w, h = box.sides
        k = math.floor(ang / (math.pi / 2))
        alpha = ang - k * (math.pi / 2)
        if alpha >= math.pi / 2:  # rounding at the upper end
            alpha -= math.pi / 2
            k += 1
        if k % 2:
            w, h = h, w
        return cls(float(cx), float(cy), w, h, alpha)


def rotate_points(points, angle: float, about=(0.0, 0.0)) -> np.ndarray:
    """Counter-clockwise rotation in the y-up frame (clockwise on screen)."""
    pts = np.asarray(points, dtype=float)
    o = np.asarray(about, dtype=float)
    c, s = math.cos(angle), math.sin(angle)
    d = pts - o
    # y-up rotation expressed in y-down coordinates
    x = c * d[:, 0] + s * d[:, 1]
    y = -s * d[:, 0] + c * d[:, 1]
    return np.stack([x, y], axis=1) + o


def signed_distance_inside(box: OrientedBox, points) -> np.ndarray:
    """Distance from each point to the nearest box edge; negative outside."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    c = _ccw(box.corners)
    dists = []
    for i in range(4):
        a, b = c[i], c[(i + 1) % 4]
        e = b - a
        n = np.hypot(*e)
        dists.append((e[0] * (pts[:, 1] - a[1]) - e[1] * (pts[:, 0] - a[0])) / n)
    return np.min(dists, axis=0)


def rotated_iou(a: OrientedBox, b: OrientedBox) -> float:
    inter = intersection_area(a.corners, b.corners)
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def min_bounding_box(hull) -> OrientedBox:
    """Minimum-area enclosing rectangle, searched over the directions of the hull edges.

    For each edge the vertices are projected onto the edge direction and its
    normal; the span of the projections gives the rectangle for that edge.
    Projections are signed so hulls in any quadrant work.
    """
    h = as_points(hull)
    if len(h) < 3 or abs(signed_area(h)) <= EPS:
        raise DegenerateInput("hull has zero area")
    edges = np.roll(h, -1, axis=0) - h
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    keep = lengths > EPS
    ep = edges[keep] / lengths[keep, None]
    eo = np.stack([ep[:, 1], -ep[:, 0]], axis=1)

    proj_p = h @ ep.T  # (n_vertices, n_edges)
    proj_o = h @ eo.T
    min_p, max_p = proj_p.min(axis=0), proj_p.max(axis=0)
    min_o, max_o = proj_o.min(axis=0), proj_o.max(axis=0)
    areas = (max_p - min_p) * (max_o - min_o)
    k = int(np.argmin(areas))

    p, o = ep[k], eo[k]
    corners = np.array([
        min_p[k] * p + min_o[k] * o,
        max_p[k] * p + min_o[k] * o,
        max_p[k] * p + max_o[k] * o,
        min_p[k] * p + max_o[k] * o,
    ])
    return OrientedBox(corners)


def quad_to_box(quad: Sequence[float] | np.ndarray) -> OrientedBox:
    """Box from 8 numbers ``x1 y1 ... x4 y4``."""
    return OrientedBox(np.asarray(quad, dtype=float).reshape(4, 2))
