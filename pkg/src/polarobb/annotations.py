"""Plain-text quad annotations.

One box per line::

    image_id x1 y1 x2 y2 x3 y3 x4 y4 [score]

Whitespace separated; ``#`` starts a comment. Lines with a trailing score are
detections. Boxes sharing an ``image_id`` are grouped into one record, in file
order of first appearance.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import DegenerateInput, ParseError
from .geom import OrientedBox, convex_hull, min_bounding_box
from .targets import Detection

log = logging.getLogger(__name__)

RECT_RTOL = 1e-3


@dataclass
class AnnotationRecord:
    image_id: str
    quads: list[OrientedBox] = field(default_factory=list)
    scores: list[float] | None = None

    @property
    def is_detection(self) -> bool:
        return self.scores is not None

    def detections(self) -> list[Detection]:
        if self.scores is None:
            raise ValueError(f"record {self.image_id!r} carries no scores")
        return [Detection(tuple(float(v) for v in q.center), s, q) for q, s in zip(self.quads, self.scores)]


def _box_from_quad(values: list[float], lineno: int) -> OrientedBox:
    pts = np.array(values, dtype=float).reshape(4, 2)
    try:
        box = OrientedBox(pts)
    except ValueError as exc:
        raise ParseError(str(exc), lineno) from exc
    if box.is_rectangle(RECT_RTOL):
        return box
    try:
        mbb = min_bounding_box(convex_hull(pts))
    except DegenerateInput as exc:
        raise ParseError(f"degenerate quad: {exc}", lineno) from exc
    log.warning("line %d: quad is not a rectangle, replaced by its minimum bounding box", lineno)
    return mbb


def parse_annotations_text(text: str) -> list[AnnotationRecord]:
    records: dict[str, AnnotationRecord] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        image_id, nums = parts[0], parts[1:]
        if len(nums) not in (8, 9):
            raise ParseError(f"expected 8 coordinates and an optional score, got {len(nums)} numbers", lineno)
        try:
            values = [float(v) for v in nums]
        except ValueError as exc:
            raise ParseError(f"non-numeric field: {exc}", lineno) from exc
        if not np.all(np.isfinite(values)):
            raise ParseError("non-finite value", lineno)
        box = _box_from_quad(values[:8], lineno)
        score = values[8] if len(values) == 9 else None
        if score is not None and not 0.0 <= score <= 1.0:
            raise ParseError(f"score {score} outside [0, 1]", lineno)

        rec = records.get(image_id)
        if rec is None:
            rec = records[image_id] = AnnotationRecord(image_id, [], [] if score is not None else None)
        if (score is None) != (rec.scores is None):
            raise ParseError(f"image {image_id!r} mixes scored and unscored boxes", lineno)
        rec.quads.append(box)
        if score is not None:
            rec.scores.append(score)
    return list(records.values())


def parse_annotations(path) -> list[AnnotationRecord]:
    return parse_annotations_text(Path(path).read_text())


def format_annotations(records: Iterable[AnnotationRecord]) -> str:
    lines = []
    for rec in records:
        for i, box in enumerate(rec.quads):
            fields = [rec.image_id] + [repr(float(v)) for v in box.corners.ravel()]
            if rec.scores is not None:
                fields.append(repr(float(rec.scores[i])))
            lines.append(" ".join(fields))
    return "".join(line + "\n" for line in lines)


def write_annotations(path, records: Iterable[AnnotationRecord]) -> None:
    Path(path).write_text(format_annotations(records))


def detections_to_records(dets_by_image: dict[str, list[Detection]]) -> list[AnnotationRecord]:
    return [
        AnnotationRecord(image_id, [d.box for d in dets], [d.score for d in dets])
        for image_id, dets in sorted(dets_by_image.items())
    ]
