"""Gradient-descent harness on the encoding loss, plus a naive angle baseline.

No network is involved: the fitted variable is the encoding vector predicted
at a single center, with the center held at the ground truth.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .analysis import Curve
from .codec import DEFAULT_N, encode
from .geom import BoxParam, OrientedBox
from .loss import LossConfig, iou_weight, prediction_iou, smooth_l1


@dataclass(frozen=True)
class FitConfig:
    steps: int = 150
    learning_rate: float = 0.2
    init_perturbation: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.init_perturbation < 0:
            raise ValueError("init_perturbation must be >= 0")


@dataclass(frozen=True)
class FitRecord:
    step: int
    loss: float
    iou: float
    params: np.ndarray


def polar_loss(pred: np.ndarray, target: np.ndarray, gt: OrientedBox, cfg: LossConfig = LossConfig()):
    """Single-target encoding loss; returns ``(loss, grad, iou)`` with the IOU weight held fixed."""
    val, dval = smooth_l1(pred, target)
    ls = float(val.sum())
    iou = prediction_iou(gt.center, pred, gt)
    w = iou_weight(ls, iou, cfg)
    return w * ls, w * dval, iou


def fit_polar(gt: OrientedBox, cfg: FitConfig = FitConfig(), n: int = DEFAULT_N, loss_cfg: LossConfig = LossConfig()) -> list[FitRecord]:
    """Fit a perturbed encoding back to ``gt``; the trace holds ``steps + 1`` records."""
    target = encode(gt, n).distances
    rng = np.random.default_rng(cfg.seed)
    p = cfg.init_perturbation
    pred = target * (1 + rng.uniform(-p, p, size=n)) if p > 0 else target.copy()

    trace = []
    for step in range(cfg.steps + 1):
        loss, grad, iou = polar_loss(pred, target, gt, loss_cfg)
        trace.append(FitRecord(step, loss, iou, pred.copy()))
        if step < cfg.steps:
            pred = pred - cfg.learning_rate * grad
    return trace


def trace_to_csv(trace: Sequence[FitRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "loss", "iou"])
    for r in trace:
        w.writerow([r.step, f"{r.loss:.12g}", f"{r.iou:.12g}"])
    return buf.getvalue()


def trace_from_csv(text: str) -> list[tuple[int, float, float]]:
    return [(int(r["step"]), float(r["loss"]), float(r["iou"])) for r in csv.DictReader(io.StringIO(text))]


def angle_baseline_loss(pred: BoxParam, gt: BoxParam) -> float:
    """Smooth L1 summed over (cx, cy, w, h, alpha); no wraparound handling on purpose."""
    a = np.array([pred.cx, pred.cy, pred.w, pred.h, pred.alpha])
    b = np.array([gt.cx, gt.cy, gt.w, gt.h, gt.alpha])
    return float(smooth_l1(a, b)[0].sum())


def boundary_sweep_compare(proto: OrientedBox, thetas, n: int = DEFAULT_N, cfg: LossConfig = LossConfig()) -> tuple[Curve, Curve]:
    """Loss between ``proto`` and each rotated copy, under both representations."""
    pred_enc = encode(proto, n).distances
    pred_param = BoxParam.from_box(proto)
    polar, base = [], []
    for t in thetas:
        gt = proto.rotated(t)
        polar.append(polar_loss(pred_enc, encode(gt, n).distances, gt, cfg)[0])
        base.append(angle_baseline_loss(pred_param, BoxParam.from_box(gt)))
    return Curve("polar_loss", thetas, polar), Curve("angle_baseline_loss", thetas, base)


def max_jump(curve: Curve) -> float:
    return float(np.max(np.abs(np.diff(curve.y)))) if len(curve.y) > 1 else 0.0


def rotation_sweep(start: float, stop: float, step: float) -> np.ndarray:
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)
