"""Polar encoding of oriented boxes.

A box is described by its center and ``N`` center-to-boundary distances taken
at angles ``pi * i / N`` for ``i = 1..N``. Angles are measured counter-clockwise
from the +x axis in the y-up frame, so a corner above the center on screen
(smaller y) has a positive angle. Central symmetry of the rectangle means the
distances at ``theta`` and ``theta + pi`` agree, so half a turn is enough.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, NumericalGuard
from .geom import OrientedBox, convex_hull, min_bounding_box

DEFAULT_N = 8
DENOM_GUARD = 1e-12


@dataclass(frozen=True)
class PolarEncoding:
    center: tuple[float, float]
    distances: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.distances, dtype=float).copy()
        if d.ndim != 1 or len(d) < 3:
            raise ValueError("an encoding needs at least 3 distances")
        if not np.all(np.isfinite(d)) or not all(math.isfinite(v) for v in self.center):
            raise ValueError("encoding values must be finite")
        if np.any(d <= 0):
            raise ValueError("encoding distances must be positive")
        d.setflags(write=False)
        object.__setattr__(self, "distances", d)
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    @property
    def n(self) -> int:
        return len(self.distances)

    @property
    def angles(self) -> np.ndarray:
        return sample_angles(self.n)


@dataclass(frozen=True)
class SortedCornerFrame:
    center: tuple[float, float]
    sorted_angles: tuple[float, float, float, float]
    radii: tuple[float, float, float, float]


def sample_angles(n: int) -> np.ndarray:
    return math.pi * np.arange(1, n + 1) / n


def corner_frame(box: OrientedBox) -> SortedCornerFrame:
    c = box.corners
    xc, yc = c.mean(axis=0)
    angles, radii = [], []
    for x, y in c:
        z = math.hypot(x - xc, y - yc)
        if z == 0:
            raise DegenerateInput("a corner coincides with the box center")
        a = math.acos(min(1.0, max(-1.0, (x - xc) / z)))
        # Heaviside step with u(0) = 0: corners level with or above the center keep +arccos
        if y - yc > 0:
            a = -a
        angles.append(a)
        radii.append(z)
    order = sorted(range(4), key=lambda i: angles[i])
    return SortedCornerFrame(
        center=(float(xc), float(yc)),
        sorted_angles=tuple(angles[i] for i in order),
        radii=tuple(radii[i] for i in order),
    )


def edge_for_angle(frame: SortedCornerFrame, theta: float) -> tuple[int, int]:
    """Indices (j, k) of the corners bounding the angular interval holding ``theta``.

    Intervals are half-open on the left, ``(a_j, a_k]``; the fourth one wraps
    through -pi as ``(-pi, a_1] U (a_4, pi]``. ``theta`` must lie in (-pi, pi].
    """
    k = bisect_left(frame.sorted_angles, theta)
    if k == 0 or k == 4:
        return 3, 0
    return k - 1, k


def _wrap(theta: float) -> float:
    # into (-pi, pi]
    t = math.remainder(theta, 2 * math.pi)
    return math.pi if t == -math.pi else t


def polar_distance(frame: SortedCornerFrame, theta: float) -> float:
    """Center-to-edge distance along ``theta`` from the two endpoints of the hit edge."""
    theta = _wrap(theta)
    j, k = edge_for_angle(frame, theta)
    aj, ak = frame.sorted_angles[j], frame.sorted_angles[k]
    rj, rk = frame.radii[j], frame.radii[k]
    denom = rk * math.sin(theta - ak) + rj * math.sin(aj - theta)
    if abs(denom) < DENOM_GUARD:
        raise NumericalGuard(f"denominator {denom:.3e} at theta={theta:.6f}")
    return rj * rk * math.sin(aj - ak) / denom


def encode(box: OrientedBox, n: int = DEFAULT_N) -> PolarEncoding:
    if n < 3:
        raise ValueError("N must be at least 3")
    frame = corner_frame(box)
    d = np.array([polar_distance(frame, t) for t in sample_angles(n)])
    return PolarEncoding(frame.center, d)


def polar_points(center, distances) -> np.ndarray:
    """The 2N Cartesian boundary points of an encoding (no validity checks).

    Each distance is placed at its sample angle and again half a turn later.
    """
    d = np.asarray(distances, dtype=float)
    theta = sample_angles(len(d))
    theta = np.concatenate([theta, theta + math.pi])
    d = np.concatenate([d, d])
    cx, cy = center
    return np.stack([cx + d * np.cos(theta), cy - d * np.sin(theta)], axis=1)


def decode_points(enc: PolarEncoding) -> np.ndarray:
    return polar_points(enc.center, enc.distances)


def decode_distances(center, distances) -> OrientedBox:
    """Minimum bounding box of the boundary points implied by raw distances."""
    return min_bounding_box(convex_hull(polar_points(center, distances)))


def decode(enc: PolarEncoding) -> OrientedBox:
    return decode_distances(enc.center, enc.distances)


def roundtrip_iou(box: OrientedBox, n: int = DEFAULT_N) -> float:
    from .geom import rotated_iou

    return rotated_iou(decode(encode(box, n)), box)
