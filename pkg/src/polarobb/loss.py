"""Three-part detection loss with analytic gradients.

Every loss returns ``(value, grad)`` where ``grad`` has the shape of the
prediction it differentiates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .codec import decode_distances
from .errors import DegenerateInput, DimMismatch, EmptyMask, NumericalGuard
from .geom import OrientedBox, rotated_iou


@dataclass(frozen=True)
class LossConfig:
    alpha: float = 2.0
    beta: float = 4.0
    gamma: float = 1.0
    prob_clamp: float = 1e-6
    iou_clamp: float = 1e-6
    ls_guard: float = 1e-9

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "prob_clamp", "iou_clamp", "ls_guard"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class LossBreakdown:
    hm: float
    off: float
    encode: float
    total: float


def heatmap_loss(pred: np.ndarray, gt: np.ndarray, k: int, cfg: LossConfig = LossConfig()):
    """Penalty-reduced focal loss over every cell, normalized by the target count ``k``."""
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if pred.shape != gt.shape:
        raise DimMismatch(f"heatmap shapes differ: {pred.shape} vs {gt.shape}")
    if k < 1:
        raise ValueError("k must be >= 1")
    a, b = cfg.alpha, cfg.beta
    eps = cfg.prob_clamp
    p = np.clip(pred, eps, 1 - eps)
    inside = (pred >= eps) & (pred <= 1 - eps)
    pos = gt == 1

    q = 1 - p
    neg_w = (1 - gt) ** b
    term = np.where(pos, q**a * np.log(p), neg_w * p**a * np.log(q))
    dterm = np.where(
        pos,
        -a * q ** (a - 1) * np.log(p) + q**a / p,
        neg_w * (a * p ** (a - 1) * np.log(q) - p**a / q),
    )
    loss = -float(term.sum()) / k
    grad = np.where(inside, -dterm / k, 0.0)
    return loss, grad


def offset_loss(pred: np.ndarray, gt: np.ndarray, mask: np.ndarray):
    """Mean L1 error of the sub-cell offsets at the masked centers."""
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if pred.shape != gt.shape or pred.shape[:2] != mask.shape:
        raise DimMismatch(f"offset shapes differ: {pred.shape}, {gt.shape}, mask {mask.shape}")
    k = int(mask.sum())
    if k == 0:
        raise EmptyMask("offset loss needs at least one target")
    diff = (pred - gt)[mask]
    loss = float(np.abs(diff).sum()) / k
    grad = np.zeros_like(pred)
    grad[mask] = np.sign(diff) / k
    return loss, grad


def smooth_l1(x1, x2):
    """Elementwise smooth L1 and its derivative in ``x1``."""
    d = np.asarray(x1, dtype=float) - np.asarray(x2, dtype=float)
    ad = np.abs(d)
    quad = ad < 1
    value = np.where(quad, 0.5 * d * d, ad - 0.5)
    deriv = np.where(quad, d, np.sign(d))
    if value.ndim == 0:
        return float(value), float(deriv)
    return value, deriv


def iou_weight(ls: float, iou: float, cfg: LossConfig = LossConfig()) -> float:
    """Scale applied to a target's smooth-L1 sum: ``1 + gamma * -log(iou) / ls``."""
    iou = min(max(iou, cfg.iou_clamp), 1.0)
    return 1.0 + cfg.gamma * (-math.log(iou)) / max(abs(ls), cfg.ls_guard)


def iou_weighted_smooth_l1(ls: float, iou: float, cfg: LossConfig = LossConfig()) -> float:
    return iou_weight(ls, iou, cfg) * ls


def prediction_iou(center, distances, gt: OrientedBox) -> float:
    """IOU of the box decoded from predicted distances against ``gt``; 0 if undecodable."""
    try:
        return rotated_iou(decode_distances(center, distances), gt)
    except (DegenerateInput, NumericalGuard, ValueError):
        return 0.0


def encoding_loss(
    pred: np.ndarray,
    cells: Sequence[tuple[int, int]],
    targets: Sequence[np.ndarray],
    boxes: Sequence[OrientedBox],
    cfg: LossConfig = LossConfig(),
    weights: Sequence[float] | None = None,
):
    """IOU-weighted smooth-L1 loss over the target centers.

    Returns ``(loss, grad, weights)``. Each target's weight is computed from
    the IOU of its decoded prediction and then held fixed, so ``grad`` only
    carries the smooth-L1 direction scaled by the weight. Pass ``weights`` to
    evaluate the loss with weights frozen from an earlier call.
    """
    pred = np.asarray(pred, dtype=float)
    if pred.ndim != 3:
        raise DimMismatch(f"encoding grid must be (H, W, N), got {pred.shape}")
    k = len(cells)
    if k == 0:
        raise EmptyMask("encoding loss needs at least one target")
    if len(targets) != k or len(boxes) != k:
        raise DimMismatch("cells, targets and boxes must have equal length")
    if weights is not None and len(weights) != k:
        raise DimMismatch("one weight per target expected")

    grad = np.zeros_like(pred)
    total = 0.0
    used = []
    for i, ((x, y), e, box) in enumerate(zip(cells, targets, boxes)):
        e = np.asarray(e, dtype=float)
        if e.shape != (pred.shape[2],):
            raise DimMismatch(f"target encoding has {e.shape}, grid has {pred.shape[2]} channels")
        val, dval = smooth_l1(pred[y, x], e)
        ls = float(val.sum())
        if weights is None:
            w = iou_weight(ls, prediction_iou(box.center, pred[y, x], box), cfg)
        else:
            w = float(weights[i])
        used.append(w)
        total += w * ls
        grad[y, x] += w * dval / k
    return total / k, grad, used


def total_loss(hm: float, off: float, encode: float) -> LossBreakdown:
    parts = (hm, off, encode)
    if not all(math.isfinite(v) for v in parts):
        raise ValueError("loss parts must be finite")
    return LossBreakdown(hm=hm, off=off, encode=encode, total=math.fsum(parts))
