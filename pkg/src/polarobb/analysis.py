"""Angle-error studies of the polar representation.

Produces sampled curves for the continuous boundary-distance function, the
summed sample difference between a box and a rotated copy, and the IOU drop of
a rotated copy as a function of aspect ratio.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .codec import sample_angles
from .errors import BadSweep
from .geom import OrientedBox, rotated_iou

DEFAULT_STEP = math.pi / 360
DEFAULT_ASPECTS = (1.0, 2.0, 5.0, 10.0)


@dataclass(frozen=True)
class Curve:
    label: str
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("x and y must be 1-d and of equal length")
        if len(x) > 1 and not np.all(np.diff(x) > 0):
            raise ValueError("curve x values must be strictly increasing")
        if not np.all(np.isfinite(y)):
            raise ValueError("curve y values must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def normalized(self) -> "Curve":
        peak = float(np.max(np.abs(self.y))) if len(self.y) else 0.0
        return Curve(self.label, self.x, self.y / peak if peak > 0 else self.y)


def _box_frame(box: OrientedBox):
    c = box.corners
    u = c[1] - c[0]
    v = c[3] - c[0]
    hw, hh = np.linalg.norm(u) / 2, np.linalg.norm(v) / 2
    return box.center, u / (2 * hw), v / (2 * hh), hw, hh


def boundary_distance(box: OrientedBox, phi):
    """Distance from the center to the box edge along angle ``phi`` (y-up radians).

    Computed by casting the ray in the box's own frame, independently of the
    corner-interval construction used by the encoder. Accepts scalars or arrays.
    """
    _, u, v, hw, hh = _box_frame(box)
    phi = np.asarray(phi, dtype=float)
    dx, dy = np.cos(phi), -np.sin(phi)
    a = np.abs(dx * u[0] + dy * u[1])
    b = np.abs(dx * v[0] + dy * v[1])
    with np.errstate(divide="ignore"):
        d = np.minimum(np.where(a > 0, hw / a, np.inf), np.where(b > 0, hh / b, np.inf))
    return float(d) if d.ndim == 0 else d


def s_theta(box: OrientedBox, theta: float, n: int = 8) -> float:
    """Summed absolute difference of N polar samples between a box and its copy rotated by ``theta``.

    The rotated copy's distance function is the original shifted by ``theta``;
    ``theta`` is reduced modulo pi first so whole half-turns give exactly 0.
    """
    if n < 3:
        raise ValueError("N must be at least 3")
    phi = sample_angles(n)
    t = math.fmod(theta, math.pi)
    return float(np.abs(boundary_distance(box, phi) - boundary_distance(box, phi - t)).sum())


def iou_vs_angle_error(aspect: float, theta: float) -> float:
    if aspect < 1:
        raise ValueError("aspect ratio must be >= 1")
    box = OrientedBox.from_params(0.0, 0.0, aspect, 1.0)
    return rotated_iou(box, box.rotated(theta))


def sweep(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive grid ``start, start + step, ...`` up to ``stop``."""
    if not (math.isfinite(start) and math.isfinite(stop) and math.isfinite(step)):
        raise BadSweep("sweep bounds must be finite")
    if step <= 0 or stop <= start:
        raise BadSweep(f"empty sweep: start={start}, stop={stop}, step={step}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


def s_theta_curves(aspect: float, ns: Iterable[int], thetas, normalize: bool = False, height: float = 1.0) -> list[Curve]:
    box = OrientedBox.from_params(0.0, 0.0, aspect * height, height)
    curves = []
    for n in ns:
        c = Curve(f"S_theta_a{aspect:g}_N{n}", thetas, [s_theta(box, t, n) for t in thetas])
        curves.append(c.normalized() if normalize else c)
    return curves


def d_phi_curves(box: OrientedBox, theta: float, phis) -> list[Curve]:
    """Boundary distance of ``box`` and of its copy rotated by ``theta``."""
    rotated = box.rotated(theta)
    return [
        Curve("d_phi_0", phis, boundary_distance(box, phis)),
        Curve(f"d_phi_theta{theta:g}", phis, boundary_distance(rotated, phis)),
    ]


def iou_sensitivity_curves(aspects: Iterable[float], thetas) -> list[Curve]:
    return [Curve(f"iou_a{a:g}", thetas, [iou_vs_angle_error(a, t) for t in thetas]) for a in aspects]


@dataclass(frozen=True)
class SweepConfig:
    mode: str = "s-theta"
    start: float = 0.0
    stop: float = math.pi
    step: float = DEFAULT_STEP
    aspects: Sequence[float] = DEFAULT_ASPECTS
    ns: Sequence[int] = (8, 32)
    theta: float = math.pi / 6
    normalize: bool = False


MODES = ("s-theta", "d-phi", "iou-sensitivity", "boundary-compare")


def emit_curves(cfg: SweepConfig) -> list[Curve]:
    if cfg.mode not in MODES:
        raise ValueError(f"unknown mode {cfg.mode!r}; expected one of {MODES}")
    xs = sweep(cfg.start, cfg.stop, cfg.step)
    if cfg.mode == "s-theta":
        curves = []
        for a in cfg.aspects:
            curves.extend(s_theta_curves(a, cfg.ns, xs, cfg.normalize))
        return curves
    if cfg.mode == "d-phi":
        a = cfg.aspects[0] if cfg.aspects else 2.0
        return d_phi_curves(OrientedBox.from_params(0.0, 0.0, a, 1.0), cfg.theta, xs)
    if cfg.mode == "iou-sensitivity":
        return iou_sensitivity_curves(cfg.aspects, xs)

    from .descent import boundary_sweep_compare

    curves = []
    for a in cfg.aspects:
        proto = OrientedBox.from_params(0.0, 0.0, 10.0 * a, 10.0)
        polar, base = boundary_sweep_compare(proto, xs, n=cfg.ns[0] if cfg.ns else 8)
        curves += [
            Curve(f"{polar.label}_a{a:g}", polar.x, polar.y),
            Curve(f"{base.label}_a{a:g}", base.x, base.y),
        ]
    return curves


def curves_to_csv(curves: Iterable[Curve]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "label"])
    for c in curves:
        for x, y in zip(c.x, c.y):
            w.writerow([f"{x:.12g}", f"{y:.12g}", c.label])
    return buf.getvalue()


def curves_from_csv(text: str) -> list[Curve]:
    rows = list(csv.DictReader(io.StringIO(text)))
    grouped: dict[str, tuple[list, list]] = {}
    for r in rows:
        xs, ys = grouped.setdefault(r["label"], ([], []))
        xs.append(float(r["x"]))
        ys.append(float(r["y"]))
    return [Curve(label, xs, ys) for label, (xs, ys) in grouped.items()]
