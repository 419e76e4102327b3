import math

import numpy as np
import pytest

from polarobb.geom import OrientedBox


def random_box(rng, center_range=(50.0, 550.0), short=(8.0, 40.0), max_aspect=4.0) -> OrientedBox:
    h = rng.uniform(*short)
    a = rng.uniform(1.0, max_aspect)
    cx, cy = rng.uniform(*center_range, size=2)
    return OrientedBox.from_params(cx, cy, a * h, h, rng.uniform(0, math.pi))


def _inside(box: OrientedBox, pts) -> np.ndarray:
    # slab test in the box frame spanned by two adjacent edges
    o = box.corners[0]
    mask = np.ones(len(pts), bool)
    for e in (box.corners[1] - o, box.corners[3] - o):
        t = (pts - o) @ e / (e @ e)
        mask &= (t >= 0) & (t <= 1)
    return mask


def mc_iou(a: OrientedBox, b: OrientedBox, n: int, rng) -> float:
    """Monte-Carlo IOU: uniform samples over the joint axis-aligned bounds."""
    pts = np.vstack([a.corners, b.corners])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    s = rng.uniform(lo, hi, size=(n, 2))
    ina, inb = _inside(a, s), _inside(b, s)
    union = np.count_nonzero(ina | inb)
    return np.count_nonzero(ina & inb) / union if union else 0.0


def _rect_areas(pts, angles):
    c, s = np.cos(angles), np.sin(angles)
    px = pts[:, :1] * c + pts[:, 1:] * s
    py = -pts[:, :1] * s + pts[:, 1:] * c
    return (px.max(axis=0) - px.min(axis=0)) * (py.max(axis=0) - py.min(axis=0))


def sweep_min_box_area(points, step=1e-4) -> float:
    """Smallest axis-projected bounding-box area over a dense grid of rotations."""
    pts = np.asarray(points, dtype=float)
    angles = np.arange(0.0, math.pi / 2, step)
    return min(float(_rect_areas(pts, chunk).min()) for chunk in np.array_split(angles, max(1, len(angles) // 2000)))


def refined_min_box_area(points, step=1e-4, levels=4, factor=100) -> float:
    """Dense sweep, then finer sweeps around the best angle.

    Area has a kink at the optimum, so a single grid only bounds the minimum
    to O(step); each level narrows the window by ``factor``.
    """
    pts = np.asarray(points, dtype=float)
    angles = np.arange(0.0, math.pi / 2, step)
    areas = _rect_areas(pts, angles)
    i = int(np.argmin(areas))
    best, phi = float(areas[i]), angles[i]
    for _ in range(levels):
        fine = step / factor
        angles = phi + np.arange(-step, step + fine / 2, fine)
        areas = _rect_areas(pts, angles)
        i = int(np.argmin(areas))
        best, phi, step = min(best, float(areas[i])), angles[i], fine
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
