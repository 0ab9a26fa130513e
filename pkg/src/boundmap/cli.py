"""Command-line entry point: ``boundmap <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import shutil
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .anchor_supervision import (SupervisionTarget, build_target, objectness_loss,
                                 partition_pixels, sample_background,
                                 select_positive_anchors, per_box_feature_maps)
from .bm_core import generate_map
from .config import RunConfig
from .errors import ValidationError
from .evaluation import froc
from .formats import (parse_annotations, parse_detections, read_map, safe_name,
                      write_map, write_pgm)
from .grid_resize import GridSpec
from .imbalance import box_stats, histogram, write_histogram
from .roi_supervision import abm_loss


class OutputDir:
    """Tracks files written under ``root`` and removes them on failure."""

    def __init__(self, root):
        self.root = Path(root)
        self.files: list[Path] = []
        self._made_root = False

    def __enter__(self):
        if self.root.exists() and not self.root.is_dir():
            raise ValidationError(f"{self.root} exists and is not a directory")
        if not self.root.exists():
            self.root.mkdir(parents=True)
            self._made_root = True
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            return False
        if self._made_root:
            shutil.rmtree(self.root, ignore_errors=True)
        else:
            for f in self.files:
                f.unlink(missing_ok=True)
        return False

    def path(self, name: str) -> Path:
        p = self.root / name
        self.files.append(p)
        return p

    def add(self, paths):
        self.files.extend(Path(p) for p in paths)

    def write_json(self, name: str, obj, indent: int | None = 2) -> Path:
        p = self.path(name)
        p.write_text(json.dumps(obj, indent=indent) + "\n")
        return p


def _pixel_list(pixels: np.ndarray) -> list[list[int]]:
    return [[int(x), int(y)] for x, y in pixels]


def _load_config(args) -> RunConfig:
    overrides = {
        "stride": args.stride,
        "boundary": args.boundary,
        "seed": args.seed,
        "small_area": args.small_area,
        "medium_area": args.medium_area,
        "baseline_iou": args.baseline_iou,
        "eval_iou": args.eval_iou,
        "min_background": args.min_background,
    }
    if args.fppi:
        try:
            overrides["fppi_points"] = [float(p) for p in args.fppi.split(",")]
        except ValueError:
            raise ValidationError(f"bad --fppi list {args.fppi!r}") from None
    return RunConfig.load(args.config, overrides)


def _records(args):
    return sorted(parse_annotations(args.annotations, args.format), key=lambda r: r.image_id)


def _run_manifest(command: str, cfg: RunConfig, inputs, images) -> dict:
    return {"command": command, "version": __version__, "config": cfg.to_dict(),
            "inputs": [str(p) for p in inputs], "images": images}


def cmd_gen_map(args, adaptive: bool) -> int:
    cfg = _load_config(args)
    records = _records(args)
    policy = cfg.alpha_policy() if adaptive else None
    kind = "abm" if adaptive else "bm"
    images = []
    with OutputDir(args.out) as out:
        for rec in records:
            values = generate_map(rec.boxes, rec.image_width, rec.image_height, policy)
            stem = f"{safe_name(rec.image_id)}.{kind}"
            out.add(write_map(out.path(f"{stem}.f32"), values))
            if args.pgm:
                write_pgm(out.path(f"{stem}.pgm"), values)
            images.append({"image_id": rec.image_id, "map": f"{stem}.f32",
                           "boxes": len(rec.boxes)})
        out.write_json("run.json", _run_manifest(f"gen-{kind}", cfg, [args.annotations], images))
    return 0


def cmd_targets(args) -> int:
    cfg = _load_config(args)
    records = _records(args)
    rng = np.random.default_rng(cfg.seed)
    images = []
    with OutputDir(args.out) as out:
        for rec in records:
            grid = GridSpec(rec.image_width, rec.image_height, cfg.stride, cfg.anchor_classes)
            image_seed = int(rng.integers(0, 2 ** 63))
            target = build_target(rec.boxes, grid, cfg.boundary, image_seed,
                                  cfg.min_background, cfg.positive_area_threshold)
            stem = safe_name(rec.image_id)
            out.add(write_map(out.path(f"{stem}.bm_r.f32"), target.target))
            if args.pgm:
                write_pgm(out.path(f"{stem}.bm_r.pgm"), target.target)
            out.write_json(f"{stem}.targets.json", {
                "image_id": rec.image_id,
                "feature_width": grid.feature_width,
                "feature_height": grid.feature_height,
                "stride": grid.stride,
                "boundary": target.boundary,
                "seed": target.seed,
                "foreground": _pixel_list(target.foreground),
                "background": _pixel_list(target.background),
                "sampled_background": _pixel_list(target.sampled_background),
                "positives": _pixel_list(target.positives),
            }, indent=None)
            images.append({"image_id": rec.image_id, "seed": image_seed,
                           "foreground": len(target.foreground),
                           "sampled_background": len(target.sampled_background),
                           "positives": len(target.positives)})
        out.write_json("run.json", _run_manifest("targets", cfg, [args.annotations], images))
    return 0


def cmd_stats_imbalance(args) -> int:
    cfg = _load_config(args)
    records = _records(args)
    anchors = cfg.anchor_config()
    box_rows = []
    image_rows = []
    for rec in records:
        grid = GridSpec(rec.image_width, rec.image_height, cfg.stride)
        rows = box_stats(rec.image_id, rec.boxes, grid, anchors, cfg.boundary,
                         cfg.positive_area_threshold)
        loc_p = select_positive_anchors(rec.boxes, per_box_feature_maps(rec.boxes, grid),
                                        cfg.boundary, cfg.positive_area_threshold)
        box_rows.extend(rows)
        image_rows.append((rec.image_id, sum(r.iou_positives for r in rows), len(loc_p)))

    per_box_lines = ["image_id,box,iou_positives,loc_p"]
    per_box_lines += [f"{r.image_id},{r.box_index},{r.iou_positives},{r.loc_p}" for r in box_rows]
    per_image_lines = ["image_id,iou_positives,loc_p"]
    per_image_lines += [f"{i},{n},{m}" for i, n, m in image_rows]
    print("\n".join(per_box_lines))
    print()
    print("\n".join(per_image_lines))

    hist = histogram([r.iou_positives for r in box_rows], [n for _, n, _ in image_rows])
    if args.out:
        with OutputDir(args.out) as out:
            out.path("per_box.csv").write_text("\n".join(per_box_lines) + "\n")
            out.path("per_image.csv").write_text("\n".join(per_image_lines) + "\n")
            write_histogram(out.path("histogram.csv"), hist)
            out.write_json("run.json", _run_manifest("stats-imbalance", cfg,
                                                     [args.annotations], []))
    return 0


def cmd_froc(args) -> int:
    cfg = _load_config(args)
    records = parse_annotations(args.annotations, args.format)
    gts = {r.image_id: r.boxes for r in records}
    dets = parse_detections(args.detections)
    result = froc(dets, gts, cfg.fppi_points, cfg.eval_iou, interpolate=args.interpolate)
    lines = [f"sensitivity@{p:g} = {s:.4f}" for p, s in result.points]
    lines.append(f"average = {result.average:.4f}")
    print("\n".join(lines))
    if args.out:
        with OutputDir(args.out) as out:
            rows = ["fppi,sensitivity"] + [f"{p:g},{s:.6f}" for p, s in result.points]
            rows.append(f"average,{result.average:.6f}")
            out.path("froc.csv").write_text("\n".join(rows) + "\n")
            out.write_json("run.json", _run_manifest(
                "froc", cfg, [args.detections, args.annotations], sorted(gts)))
    return 0


def cmd_losses(args) -> int:
    cfg = _load_config(args)
    pred = read_map(args.pred)
    target = read_map(args.target)
    if pred.shape != target.shape:
        raise ValidationError(f"prediction shape {pred.shape} does not match target {target.shape}")
    if args.mode == "objectness":
        fg, bg = partition_pixels(target)
        sampled = sample_background(fg, bg, cfg.seed, cfg.min_background)
        sup = SupervisionTarget(target=target, foreground=fg, sampled_background=sampled,
                                positives=np.zeros((0, 2), dtype=np.int64),
                                boundary=cfg.boundary, seed=cfg.seed, background=bg)
        loss = objectness_loss(pred, sup, reduction=args.reduction or "sum")
    else:
        loss = abm_loss(pred, target, reduction=args.reduction or "mean")
    print(f"{loss:.10g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields")
    common.add_argument("--seed", type=int, help="seed for every random draw")
    common.add_argument("--stride", type=int)
    common.add_argument("--boundary", type=float, help="positive-anchor boundary value")
    common.add_argument("--small-area", type=float)
    common.add_argument("--medium-area", type=float)
    common.add_argument("--baseline-iou", type=float)
    common.add_argument("--eval-iou", type=float)
    common.add_argument("--min-background", type=int)
    common.add_argument("--fppi", help="comma-separated FPPI points")

    ann = argparse.ArgumentParser(add_help=False)
    ann.add_argument("annotations")
    ann.add_argument("--format", choices=["csv", "json"], help="default: file extension")

    parser = argparse.ArgumentParser(prog="boundmap", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in [("gen-bm", "write per-image bounding maps"),
                        ("gen-abm", "write per-image size-adaptive bounding maps"),
                        ("targets", "write stage-1 objectness targets and pixel sets")]:
        p = sub.add_parser(name, parents=[common, ann], help=help_)
        p.add_argument("--out", required=True)
        p.add_argument("--pgm", action="store_true", help="also dump 8-bit PGM previews")

    p = sub.add_parser("stats-imbalance", parents=[common, ann],
                       help="IoU-matched vs BM-selected positive anchor counts")
    p.add_argument("--out", help="directory for CSV tables and histogram")

    p = sub.add_parser("froc", parents=[common], help="sensitivity at fixed FPPI")
    p.add_argument("detections")
    p.add_argument("annotations")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--interpolate", action="store_true")
    p.add_argument("--out", help="directory for froc.csv")

    p = sub.add_parser("losses", parents=[common], help="objectness or ABM loss for two maps")
    p.add_argument("--pred", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--mode", choices=["objectness", "abm"], required=True)
    p.add_argument("--reduction", choices=["sum", "mean"])
    return parser


COMMANDS = {
    "gen-bm": lambda a: cmd_gen_map(a, adaptive=False),
    "gen-abm": lambda a: cmd_gen_map(a, adaptive=True),
    "targets": cmd_targets,
    "stats-imbalance": cmd_stats_imbalance,
    "froc": cmd_froc,
    "losses": cmd_losses,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
