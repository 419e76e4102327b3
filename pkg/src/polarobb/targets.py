"""Dense training targets at 1/R resolution and the matching inference decode.

Grids are plain numpy arrays indexed ``[row, col] == [y, x]``:

* heatmap ``(H, W)`` with values in [0, 1]
* offsets ``(H, W, 2)`` holding sub-cell ``(dx, dy)``
* encodings ``(H, W, N)`` holding polar distances in input pixels

Cells are reported as ``(x, y)`` tuples.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.ndimage import maximum_filter

from .codec import DEFAULT_N, decode_distances, encode
from .errors import DegenerateInput, DimMismatch, NumericalGuard
from .geom import OrientedBox

log = logging.getLogger(__name__)

DEFAULT_R = 4
SIGMA_FLOOR = 0.5


class CollisionWarning(UserWarning):
    """Two targets fall into the same output cell."""


@dataclass(frozen=True)
class Detection:
    center: tuple[float, float]
    score: float
    box: OrientedBox

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {self.score}")


def center_cell(center, r: int) -> tuple[int, int]:
    return int(math.floor(center[0] / r)), int(math.floor(center[1] / r))


def _check_dims(grid_dims) -> tuple[int, int]:
    h, w = grid_dims
    if h < 1 or w < 1:
        raise ValueError(f"grid dims must be positive, got {grid_dims}")
    return int(h), int(w)


def gaussian_sigma(box: OrientedBox, r: int) -> float:
    """One third of the short side, in output cells, floored at half a cell."""
    return max(min(box.sides) / (3.0 * r), SIGMA_FLOOR)


def gaussian_heatmap(boxes: Sequence[OrientedBox], grid_dims, r: int = DEFAULT_R) -> np.ndarray:
    if r < 1:
        raise ValueError("downsample rate must be >= 1")
    h, w = _check_dims(grid_dims)
    heat = np.zeros((h, w))
    ys, xs = np.mgrid[0:h, 0:w]
    for box in boxes:
        cx, cy = center_cell(box.center, r)
        sigma = gaussian_sigma(box, r)
        g = np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * sigma**2))
        np.maximum(heat, g, out=heat)
    return heat


def _assign_cells(boxes: Sequence[OrientedBox], grid_dims, r: int) -> dict[tuple[int, int], OrientedBox]:
    """Map each in-grid center cell to the box that owns it; larger area wins a collision."""
    h, w = _check_dims(grid_dims)
    owners: dict[tuple[int, int], OrientedBox] = {}
    for box in boxes:
        cell = center_cell(box.center, r)
        if not (0 <= cell[0] < w and 0 <= cell[1] < h):
            raise ValueError(f"box center {tuple(box.center)} falls outside the grid")
        prev = owners.get(cell)
        if prev is not None:
            warnings.warn(f"two targets share cell {cell}; keeping the larger one", CollisionWarning, stacklevel=3)
            if prev.area > box.area:
                continue
        owners[cell] = box
    return owners


def offset_targets(boxes: Sequence[OrientedBox], grid_dims, r: int = DEFAULT_R):
    """Sub-cell quantization error at each center cell, plus the center mask."""
    h, w = _check_dims(grid_dims)
    off = np.zeros((h, w, 2))
    mask = np.zeros((h, w), dtype=bool)
    for (x, y), box in _assign_cells(boxes, grid_dims, r).items():
        c = box.center
        off[y, x] = (c[0] / r - x, c[1] / r - y)
        mask[y, x] = True
    return off, mask


def encoding_targets(boxes: Sequence[OrientedBox], n: int = DEFAULT_N, grid_dims=None, r: int = DEFAULT_R):
    h, w = _check_dims(grid_dims)
    enc = np.zeros((h, w, n))
    mask = np.zeros((h, w), dtype=bool)
    for (x, y), box in _assign_cells(boxes, grid_dims, r).items():
        enc[y, x] = encode(box, n).distances
        mask[y, x] = True
    return enc, mask


def extract_peaks(heat: np.ndarray, score_threshold: float = 0.1, top_k: int = 100):
    """Local maxima of a 3x3 neighborhood, best first; plateau cells all count."""
    heat = np.asarray(heat, dtype=float)
    pooled = maximum_filter(heat, size=3, mode="constant", cval=-np.inf)
    ys, xs = np.nonzero((pooled == heat) & (heat >= score_threshold))
    scores = heat[ys, xs]
    order = np.argsort(-scores, kind="stable")[:top_k]
    return [((int(xs[i]), int(ys[i])), float(scores[i])) for i in order]


def assemble_detections(
    heat: np.ndarray,
    offsets: np.ndarray,
    encodings: np.ndarray,
    r: int = DEFAULT_R,
    score_threshold: float = 0.1,
    top_k: int = 100,
) -> list[Detection]:
    if offsets.shape[:2] != heat.shape or encodings.shape[:2] != heat.shape or offsets.shape[2] != 2:
        raise DimMismatch(f"grid shapes disagree: {heat.shape}, {offsets.shape}, {encodings.shape}")
    dets = []
    for (x, y), score in extract_peaks(heat, score_threshold, top_k):
        dx, dy = offsets[y, x]
        center = ((x + dx) * r, (y + dy) * r)
        try:
            box = decode_distances(center, encodings[y, x])
        except (DegenerateInput, NumericalGuard) as exc:
            log.warning("skipping peak at cell (%d, %d): %s", x, y, exc)
            continue
        dets.append(Detection(center=(float(center[0]), float(center[1])), score=min(max(score, 0.0), 1.0), box=box))
    return dets
