"""Run configuration shared by every CLI subcommand."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .anchor_supervision import AnchorConfig
from .bm_core import AlphaPolicy
from .errors import ValidationError


@dataclass
class RunConfig:
    stride: int = 8
    boundary: float = 0.25
    small_area: float = 250.0
    medium_area: float = 1000.0
    alphas: tuple[float, float, float] = (0.0, 1.0, 1.4)
    positive_area_threshold: float = 16.0
    anchor_sizes: tuple[tuple[float, float], ...] = ((16, 16), (32, 32), (64, 64), (128, 128))
    baseline_iou: float = 0.7
    eval_iou: float = 0.5
    fppi_points: tuple[float, ...] = (0.5, 1.0, 2.0, 4.0)
    seed: int = 0
    min_background: int = 0
    mask_width: int = 28
    mask_height: int = 28
    anchor_classes: int = 1

    def __post_init__(self):
        self.alphas = tuple(float(a) for a in self.alphas)
        self.fppi_points = tuple(float(p) for p in self.fppi_points)
        self.anchor_sizes = tuple(
            (float(s), float(s)) if isinstance(s, (int, float)) else (float(s[0]), float(s[1]))
            for s in self.anchor_sizes)
        if len(self.alphas) != 3:
            raise ValidationError(f"alphas needs 3 values, got {self.alphas}")
        if self.stride < 1:
            raise ValidationError(f"stride must be >= 1, got {self.stride}")
        if not 0 < self.boundary < 1:
            raise ValidationError(f"boundary must lie in (0, 1), got {self.boundary}")
        if not 0 < self.eval_iou < 1:
            raise ValidationError(f"eval_iou must lie in (0, 1), got {self.eval_iou}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.mask_width < 1 or self.mask_height < 1:
            raise ValidationError("mask dims must be >= 1")
        if any(not p > 0 for p in self.fppi_points):
            raise ValidationError(f"fppi points must be positive, got {self.fppi_points}")
        # construct once so range errors surface at load time
        self.alpha_policy()
        self.anchor_config()

    def alpha_policy(self) -> AlphaPolicy:
        return AlphaPolicy(self.small_area, self.medium_area, *self.alphas)

    def anchor_config(self) -> AnchorConfig:
        return AnchorConfig(self.anchor_sizes, self.baseline_iou)

    @classmethod
    def load(cls, path: str | Path | None = None,
             overrides: Mapping[str, Any] | None = None) -> "RunConfig":
        """Defaults, then the JSON file, then non-None ``overrides``."""
        values: dict[str, Any] = {}
        if path is not None:
            try:
                loaded = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ValidationError(f"cannot read config {path}: {exc}") from exc
            if not isinstance(loaded, dict):
                raise ValidationError(f"config {path} must hold a JSON object")
            values.update(loaded)
        values.update({k: v for k, v in (overrides or {}).items() if v is not None})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**values)
        except TypeError as exc:
            raise ValidationError(f"bad config value: {exc}") from exc

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["alphas"] = list(self.alphas)
        d["fppi_points"] = list(self.fppi_points)
        d["anchor_sizes"] = [list(s) for s in self.anchor_sizes]
        return d
