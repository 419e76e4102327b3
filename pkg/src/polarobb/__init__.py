"""Polar encoding of oriented bounding boxes, with targets, losses and evaluation."""

from .codec import PolarEncoding, decode, decode_points, encode
from .errors import DegenerateInput, NumericalGuard
from .geom import BoxParam, OrientedBox, convex_hull, min_bounding_box, rotated_iou

__all__ = [
    "BoxParam",
    "DegenerateInput",
    "NumericalGuard",
    "OrientedBox",
    "PolarEncoding",
    "convex_hull",
    "decode",
    "decode_points",
    "encode",
    "min_bounding_box",
    "rotated_iou",
]
