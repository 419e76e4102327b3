"""Detection evaluation under rotated IOU, and rotated NMS."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geom import OrientedBox, rotated_iou
from .targets import Detection

DEFAULT_IOU_THR = 0.5
DEFAULT_NMS_THR = 0.1


@dataclass(frozen=True)
class MatchResult:
    order: tuple[int, ...]  # detection indices, best score first
    tp: tuple[bool, ...]  # aligned with ``order``
    gt_matched: tuple[bool, ...]

    @property
    def n_tp(self) -> int:
        return sum(self.tp)


@dataclass(frozen=True)
class PRCurve:
    recall: np.ndarray
    precision: np.ndarray

    def __len__(self):
        return len(self.recall)

    def points(self) -> list[tuple[float, float]]:
        return [(float(r), float(p)) for r, p in zip(self.recall, self.precision)]


def score_order(dets: Sequence[Detection]) -> list[int]:
    # stable: ties keep input order
    return sorted(range(len(dets)), key=lambda i: -dets[i].score)


def match_detections(dets: Sequence[Detection], gts: Sequence[OrientedBox], iou_thr: float = DEFAULT_IOU_THR) -> MatchResult:
    """Greedy matching: each detection, best score first, takes its best free GT."""
    if not 0 < iou_thr < 1:
        raise ValueError("iou_thr must lie in (0, 1)")
    order = score_order(dets)
    matched = [False] * len(gts)
    tp = []
    for i in order:
        best, best_iou = -1, -1.0
        for j, gt in enumerate(gts):
            if matched[j]:
                continue
            iou = rotated_iou(dets[i].box, gt)
            if iou > best_iou:
                best, best_iou = j, iou
        if best >= 0 and best_iou >= iou_thr:
            matched[best] = True
            tp.append(True)
        else:
            tp.append(False)
    return MatchResult(tuple(order), tuple(tp), tuple(matched))


def pr_curve(match: MatchResult, n_gt: int) -> PRCurve:
    if n_gt < 1:
        raise ValueError("n_gt must be >= 1")
    tp = np.cumsum(np.asarray(match.tp, dtype=float))
    n_det = np.arange(1, len(tp) + 1)
    return PRCurve(recall=tp / n_gt, precision=tp / n_det if len(tp) else np.zeros(0))


def average_precision(curve: PRCurve) -> float:
    """Area under the monotone precision envelope (all-point interpolation)."""
    if len(curve) == 0:
        return 0.0
    rec = np.concatenate([[0.0], curve.recall, [1.0]])
    prec = np.concatenate([[0.0], curve.precision, [0.0]])
    prec = np.maximum.accumulate(prec[::-1])[::-1]
    steps = np.nonzero(rec[1:] != rec[:-1])[0]
    return float(np.sum((rec[steps + 1] - rec[steps]) * prec[steps + 1]))


def best_f1(curve: PRCurve) -> float:
    p, r = curve.precision, curve.recall
    if len(p) == 0:
        return 0.0
    s = p + r
    f1 = np.divide(2 * p * r, s, out=np.zeros_like(s), where=s > 0)
    return float(f1.max())


def rotated_nms(dets: Sequence[Detection], nms_thr: float = DEFAULT_NMS_THR) -> list[Detection]:
    if not 0 < nms_thr < 1:
        raise ValueError("nms_thr must lie in (0, 1)")
    keep: list[Detection] = []
    for i in score_order(dets):
        d = dets[i]
        if all(rotated_iou(d.box, k.box) <= nms_thr for k in keep):
            keep.append(d)
    return keep


def evaluate(dets: Sequence[Detection], gts: Sequence[OrientedBox], iou_thr: float = DEFAULT_IOU_THR):
    """Match, then return ``(ap, best_f1, curve)``."""
    match = match_detections(dets, gts, iou_thr)
    curve = pr_curve(match, len(gts))
    return average_precision(curve), best_f1(curve), curve


def evaluate_images(dets_by_image: dict, gts_by_image: dict, iou_thr: float = DEFAULT_IOU_THR):
    """Pool per-image matches into one score-ordered curve; returns ``(ap, best_f1, curve)``."""
    n_gt = sum(len(g) for g in gts_by_image.values())
    if n_gt < 1:
        raise ValueError("no ground-truth boxes")
    pooled = []
    for image_id in sorted(set(dets_by_image) | set(gts_by_image)):
        dets = dets_by_image.get(image_id, [])
        m = match_detections(dets, gts_by_image.get(image_id, []), iou_thr)
        pooled.extend((dets[i].score, hit) for i, hit in zip(m.order, m.tp))
    pooled.sort(key=lambda t: -t[0])
    match = MatchResult(tuple(range(len(pooled))), tuple(hit for _, hit in pooled), ())
    curve = pr_curve(match, n_gt)
    return average_precision(curve), best_f1(curve), curve
