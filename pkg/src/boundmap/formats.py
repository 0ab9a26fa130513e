"""On-disk formats: annotations, detections, raw float maps and PGM dumps.

A map is stored as raw little-endian float32 in row-major order, with a
JSON sidecar at ``<path>.json`` holding its shape::

    {"width": 8, "height": 8, "dtype": "f32le", "layout": "row-major"}
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .bm_core import GtBox
from .errors import ValidationError
from .evaluation import Detection

CSV_HEADER = ["image_id", "width", "height", "x1", "y1", "x2", "y2"]


@dataclass
class AnnotationRecord:
    image_id: str
    image_width: int
    image_height: int
    boxes: list[GtBox] = field(default_factory=list)


def _make_box(coords, width: int, height: int, where: str) -> GtBox:
    try:
        box = GtBox.from_seq([float(c) for c in coords])
        box.check_bounds(width, height)
    except (ValidationError, TypeError, ValueError) as exc:
        raise ValidationError(f"{where}: invalid box {list(coords)}: {exc}") from None
    return box


def _dims(width: Any, height: Any, where: str) -> tuple[int, int]:
    try:
        w, h = int(width), int(height)
        if w != float(width) or h != float(height):
            raise ValueError("not an integer")
    except (TypeError, ValueError):
        raise ValidationError(f"{where}: bad image size {width!r}x{height!r}") from None
    if w < 1 or h < 1:
        raise ValidationError(f"{where}: image size must be positive, got {w}x{h}")
    return w, h


def _parse_csv(path: Path) -> list[AnnotationRecord]:
    records: dict[str, AnnotationRecord] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != CSV_HEADER:
            raise ValidationError(f"{path}: line 1: expected header {','.join(CSV_HEADER)}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            where = f"{path}: line {line_no}"
            if len(row) != len(CSV_HEADER):
                raise ValidationError(f"{where}: expected {len(CSV_HEADER)} fields, got {len(row)}")
            image_id = row[0].strip()
            w, h = _dims(row[1], row[2], where)
            rec = records.setdefault(image_id, AnnotationRecord(image_id, w, h))
            if (rec.image_width, rec.image_height) != (w, h):
                raise ValidationError(f"{where}: size {w}x{h} conflicts with earlier rows "
                                      f"for {image_id!r}")
            coords = [c.strip() for c in row[3:]]
            # a row with all four box fields blank declares a lesion-free image
            if all(c == "" for c in coords):
                continue
            rec.boxes.append(_make_box(coords, w, h, where))
    return list(records.values())


def _parse_json(path: Path) -> list[AnnotationRecord]:
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, list):
        raise ValidationError(f"{path}: expected a JSON array of records")
    records = []
    seen = set()
    for i, item in enumerate(data):
        where = f"{path}: record {i}"
        if not isinstance(item, dict) or not {"image_id", "width", "height"} <= set(item):
            raise ValidationError(f"{where}: needs image_id, width and height")
        image_id = str(item["image_id"])
        if image_id in seen:
            raise ValidationError(f"{where}: duplicate image_id {image_id!r}")
        seen.add(image_id)
        w, h = _dims(item["width"], item["height"], where)
        boxes = item.get("boxes", [])
        if not isinstance(boxes, list):
            raise ValidationError(f"{where}: boxes must be a list")
        records.append(AnnotationRecord(
            image_id, w, h,
            [_make_box(b, w, h, f"{where} ({image_id!r}) box {j}") for j, b in enumerate(boxes)]))
    return records


def parse_annotations(path: str | Path, fmt: str | None = None) -> list[AnnotationRecord]:
    """Read CSV or JSON annotations; ``fmt`` defaults to the file extension."""
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if not path.is_file():
        raise ValidationError(f"{path}: no such file")
    if fmt == "csv":
        return _parse_csv(path)
    if fmt == "json":
        return _parse_json(path)
    raise ValidationError(f"{path}: unknown annotation format {fmt!r} (use csv or json)")


def parse_detections(path: str | Path) -> list[Detection]:
    """JSON array of ``{"image_id", "box": [x1, y1, x2, y2], "score"}``."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, list):
        raise ValidationError(f"{path}: expected a JSON array of detections")
    dets = []
    for i, item in enumerate(data):
        where = f"{path}: detection {i}"
        try:
            box = GtBox.from_seq([float(c) for c in item["box"]])
            dets.append(Detection(str(item["image_id"]), box, float(item["score"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"{where}: {exc}") from None
    return dets


def safe_name(image_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", image_id)


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_map(path: str | Path, values: np.ndarray) -> list[Path]:
    """Write the raw map and its sidecar; returns both paths."""
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValidationError(f"expected a 2-D map, got shape {values.shape}")
    path = Path(path)
    path.write_bytes(np.ascontiguousarray(values, dtype="<f4").tobytes())
    meta = {"width": values.shape[1], "height": values.shape[0],
            "dtype": "f32le", "layout": "row-major"}
    side = sidecar_path(path)
    side.write_text(json.dumps(meta) + "\n")
    return [path, side]


def read_map(path: str | Path) -> np.ndarray:
    path = Path(path)
    side = sidecar_path(path)
    try:
        meta = json.loads(side.read_text())
        raw = path.read_bytes()
    except OSError as exc:
        raise ValidationError(f"cannot read map {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{side}: {exc.msg}") from None
    if meta.get("dtype") != "f32le" or meta.get("layout") != "row-major":
        raise ValidationError(f"{side}: unsupported dtype/layout {meta}")
    w, h = meta.get("width"), meta.get("height")
    if not (isinstance(w, int) and isinstance(h, int) and w >= 1 and h >= 1):
        raise ValidationError(f"{side}: bad shape {w}x{h}")
    if len(raw) != 4 * w * h:
        raise ValidationError(f"{path}: {len(raw)} bytes, sidecar says {w}x{h} float32")
    return np.frombuffer(raw, dtype="<f4").reshape(h, w).astype(np.float32)


def to_pgm_bytes(values: np.ndarray) -> bytes:
    """8-bit binary PGM; [0, 1] maps linearly onto [0, 255]."""
    values = np.asarray(values, dtype=np.float64)
    h, w = values.shape
    pixels = np.rint(np.clip(values, 0.0, 1.0) * 255).astype(np.uint8)
    return f"P5\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes()


def write_pgm(path: str | Path, values: np.ndarray) -> Path:
    path = Path(path)
    path.write_bytes(to_pgm_bytes(values))
    return path
