"""Command-line entry point: ``polarobb <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import zipfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis, descent, metrics
from .annotations import detections_to_records, format_annotations, parse_annotations
from .codec import DEFAULT_N, roundtrip_iou
from .errors import GTEmpty, PolarOBBError
from .targets import DEFAULT_R, assemble_detections, encoding_targets, gaussian_heatmap, offset_targets

log = logging.getLogger("polarobb")

SWEEP_NS = (4, 6, 8, 10, 12, 16)


@dataclass(frozen=True)
class RunConfig:
    n: int = DEFAULT_N
    r: int = DEFAULT_R
    iou_thr: float = metrics.DEFAULT_IOU_THR
    nms_thr: float = metrics.DEFAULT_NMS_THR
    score_thr: float = 0.1
    top_k: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("--n must be >= 3")
        if self.r < 1:
            raise ValueError("--downsample must be >= 1")
        for name in ("iou_thr", "nms_thr"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"--{name.replace('_', '-')} must lie in (0, 1)")
        if not 0 <= self.score_thr <= 1:
            raise ValueError("--score-thr must lie in [0, 1]")
        if self.top_k < 1:
            raise ValueError("--top-k must be >= 1")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _config(args) -> RunConfig:
    try:
        return RunConfig(
            n=args.n, r=args.downsample, iou_thr=args.iou_thr, nms_thr=args.nms_thr,
            score_thr=args.score_thr, top_k=args.top_k, seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_roundtrip(args) -> int:
    cfg = _config(args)
    records = parse_annotations(args.annotations)
    ns = SWEEP_NS if args.sweep else (cfg.n,)
    lines = ["image_id,index,n,iou"]
    worst = math.inf
    for n in ns:
        ious = []
        for rec in records:
            for i, box in enumerate(rec.quads):
                iou = roundtrip_iou(box, n)
                ious.append(iou)
                lines.append(f"{rec.image_id},{i},{n},{iou:.12g}")
        if ious:
            worst = min(worst, min(ious))
            print(f"N={n} boxes={len(ious)} mean_iou={np.mean(ious):.6f} min_iou={min(ious):.6f}", file=sys.stderr)
        else:
            print(f"N={n} boxes=0", file=sys.stderr)
    _emit("\n".join(lines) + "\n", args.out)
    return 2 if worst < args.floor else 0


def cmd_eval(args) -> int:
    cfg = _config(args)
    gts = {r.image_id: list(r.quads) for r in parse_annotations(args.gt)}
    if sum(len(v) for v in gts.values()) == 0:
        raise GTEmpty(f"{args.gt} holds no ground-truth boxes")
    dets = {}
    for r in parse_annotations(args.det):
        if not r.is_detection:
            raise PolarOBBError(f"detections for {r.image_id!r} carry no scores")
        dets[r.image_id] = r.detections()
    ap, f1, curve = metrics.evaluate_images(dets, gts, cfg.iou_thr)
    print(f"AP={ap:.6f}\nbest_F1={f1:.6f}")
    rows = ["recall,precision"] + [f"{r:.12g},{p:.12g}" for r, p in curve.points()]
    _emit("\n".join(rows) + "\n", args.out)
    return 0


def cmd_nms(args) -> int:
    cfg = _config(args)
    kept = {}
    for r in parse_annotations(args.det):
        if not r.is_detection:
            raise PolarOBBError(f"detections for {r.image_id!r} carry no scores")
        kept[r.image_id] = metrics.rotated_nms(r.detections(), cfg.nms_thr)
    _emit(format_annotations(detections_to_records(kept)), args.out)
    return 0


def cmd_analyze(args) -> int:
    if args.mode not in analysis.MODES:
        raise UsageError(f"invalid mode {args.mode!r}; choose from {', '.join(analysis.MODES)}")
    cfg = analysis.SweepConfig(
        mode=args.mode,
        start=args.start,
        stop=args.stop,
        step=args.step,
        aspects=tuple(args.aspects),
        ns=tuple(args.ns) if args.ns else (args.n,),
        theta=args.theta,
        normalize=args.normalize,
    )
    _emit(analysis.curves_to_csv(analysis.emit_curves(cfg)), args.out)
    return 0


def cmd_targets(args) -> int:
    cfg = _config(args)
    if not args.out:
        raise UsageError("targets needs --out for the .npz archive")
    h, w = args.grid
    arrays = {}
    for rec in sorted(parse_annotations(args.annotations), key=lambda r: r.image_id):
        boxes = rec.quads
        arrays[f"{rec.image_id}/heatmap"] = gaussian_heatmap(boxes, (h, w), cfg.r)
        off, mask = offset_targets(boxes, (h, w), cfg.r)
        enc, _ = encoding_targets(boxes, cfg.n, (h, w), cfg.r)
        arrays[f"{rec.image_id}/offsets"] = off
        arrays[f"{rec.image_id}/mask"] = mask
        arrays[f"{rec.image_id}/encodings"] = enc
    save_grids(args.out, arrays)
    return 0


def save_grids(path, arrays: dict[str, np.ndarray]) -> None:
    """Write an ``.npz`` archive with fixed entry timestamps so equal inputs give equal bytes."""
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        for key in sorted(arrays):
            info = zipfile.ZipInfo(f"{key}.npy", date_time=(1980, 1, 1, 0, 0, 0))
            with zf.open(info, "w", force_zip64=True) as fh:
                np.lib.format.write_array(fh, np.asarray(arrays[key]), allow_pickle=False)


def load_grids(path) -> dict[str, np.ndarray]:
    with np.load(path) as z:
        return {k: z[k] for k in z.files}


def cmd_detect(args) -> int:
    cfg = _config(args)
    grids = load_grids(args.grids)
    ids = sorted({k.rsplit("/", 1)[0] for k in grids})
    dets = {}
    for image_id in ids:
        dets[image_id] = assemble_detections(
            grids[f"{image_id}/heatmap"], grids[f"{image_id}/offsets"], grids[f"{image_id}/encodings"],
            cfg.r, cfg.score_thr, cfg.top_k,
        )
    _emit(format_annotations(detections_to_records(dets)), args.out)
    return 0


def cmd_fit(args) -> int:
    cfg = _config(args)
    records = parse_annotations(args.annotations)
    boxes = [b for r in records for b in r.quads]
    if not boxes:
        raise PolarOBBError("no boxes to fit")
    if not 0 <= args.box_index < len(boxes):
        raise UsageError(f"--box-index {args.box_index} out of range (0..{len(boxes) - 1})")
    try:
        fit_cfg = descent.FitConfig(
            steps=args.steps, learning_rate=args.lr, init_perturbation=args.perturbation, seed=cfg.seed
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    trace = descent.fit_polar(boxes[args.box_index], fit_cfg, cfg.n)
    print(f"final_loss={trace[-1].loss:.6g} final_iou={trace[-1].iou:.6f}", file=sys.stderr)
    _emit(descent.trace_to_csv(trace), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=DEFAULT_N, help="encoding length N")
    common.add_argument("--downsample", type=int, default=DEFAULT_R, help="output stride R")
    common.add_argument("--iou-thr", type=float, default=metrics.DEFAULT_IOU_THR)
    common.add_argument("--nms-thr", type=float, default=metrics.DEFAULT_NMS_THR)
    common.add_argument("--score-thr", type=float, default=0.1)
    common.add_argument("--top-k", type=int, default=100)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output path (stdout when omitted)")

    p = _Parser(prog="polarobb", description="Polar encoding tools for oriented boxes.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("roundtrip", parents=[common], help="encode/decode IOU per box")
    s.add_argument("annotations")
    s.add_argument("--sweep", action="store_true", help=f"run N in {SWEEP_NS}")
    s.add_argument("--floor", type=float, default=0.9, help="exit 2 if any IOU falls below")
    s.set_defaults(func=cmd_roundtrip)

    s = sub.add_parser("eval", parents=[common], help="AP / best F1 / PR curve")
    s.add_argument("gt")
    s.add_argument("det")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("nms", parents=[common], help="rotated non-maximum suppression")
    s.add_argument("det")
    s.set_defaults(func=cmd_nms)

    s = sub.add_parser("analyze", parents=[common], help="emit analysis curves as CSV")
    s.add_argument("mode", help=" | ".join(analysis.MODES))
    s.add_argument("--start", type=float, default=0.0)
    s.add_argument("--stop", type=float, default=math.pi)
    s.add_argument("--step", type=float, default=analysis.DEFAULT_STEP)
    s.add_argument("--aspects", type=float, nargs="+", default=list(analysis.DEFAULT_ASPECTS))
    s.add_argument("--ns", type=int, nargs="+", help="encoding lengths for s-theta (default: --n)")
    s.add_argument("--theta", type=float, default=math.pi / 6, help="rotation for d-phi")
    s.add_argument("--normalize", action="store_true")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("targets", parents=[common], help="ground-truth grids to .npz")
    s.add_argument("annotations")
    s.add_argument("--grid", type=int, nargs=2, metavar=("H", "W"), required=True)
    s.set_defaults(func=cmd_targets)

    s = sub.add_parser("detect", parents=[common], help="decode grids from .npz into detections")
    s.add_argument("grids")
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("fit", parents=[common], help="gradient-descent fit of one box")
    s.add_argument("annotations")
    s.add_argument("--box-index", type=int, default=0)
    s.add_argument("--steps", type=int, default=descent.FitConfig.steps)
    s.add_argument("--lr", type=float, default=descent.FitConfig.learning_rate)
    s.add_argument("--perturbation", type=float, default=descent.FitConfig.init_perturbation)
    s.set_defaults(func=cmd_fit)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"polarobb: usage error: {exc}", file=sys.stderr)
        return 1
    except (PolarOBBError, ValueError, OSError) as exc:
        print(f"polarobb: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
