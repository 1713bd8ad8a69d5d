"""Pipeline configuration: one flat JSON-serializable record of every knob,
with defaults chosen for the 256x256 synthetic setup. CLI flags override
individual fields."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .geometry import CameraIntrinsics


@dataclass
class PipelineConfig:
    seed: int = 0
    count: int = 8  # scenes per run
    variants: int = 1  # sequences per scene (same start view; >1 enables pairing)
    frames: int = 12  # rendered frames per sequence
    steps: int = 6  # trajectory keyframes
    width: int = 256
    height: int = 256
    fx: float = 256.0
    fy: float = 256.0
    templates: tuple[str, ...] = ("single_subject", "multi_subject", "landscape")
    angle_budget: str = "mix"  # "10" | "20" | "30" | "mix" | numeric degrees
    max_translation: float = 0.0
    threshold: int = 70  # standardized-score filter threshold
    strict_threshold: bool = True  # keep strictly-greater scores only
    weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    calibration_offset: float = -5.0
    calibration_gain: float = 5.0
    vq_clip_weight: float = 5.0
    vq_sharpness_floor: float = 0.1  # blur artifact flag threshold
    mq_static_threshold: float = 0.5
    mq_intensity_factor: float = 1.5
    theta: float = 5.0
    l2: float = 1e-4
    tie_margin: float = 0.1
    dpo_beta: float = 1.0
    dpo_t_low: float = 0.05
    dpo_t_high: float = 0.95
    out_dir: str = "out"

    def __post_init__(self) -> None:
        if self.count < 1 or self.variants < 1:
            raise ConfigError("count and variants must be >= 1")
        if self.frames < 2 or self.steps < 2:
            raise ConfigError("frames and steps must be >= 2")
        if self.width < 16 or self.height < 16:
            raise ConfigError("frame size too small")
        if len(self.weights) != 3:
            raise ConfigError("weights must have three entries")

    def intrinsics(self) -> CameraIntrinsics:
        return CameraIntrinsics(
            fx=self.fx,
            fy=self.fy,
            cx=self.width / 2.0,
            cy=self.height / 2.0,
            width=self.width,
            height=self.height,
        )

    def to_json(self) -> str:
        d = dataclasses.asdict(self)
        d["templates"] = list(self.templates)
        d["weights"] = list(self.weights)
        return json.dumps(d, indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        if "templates" in kwargs:
            kwargs["templates"] = tuple(kwargs["templates"])
        if "weights" in kwargs:
            kwargs["weights"] = tuple(kwargs["weights"])
        try:
            return cls(**kwargs)
        except TypeError as e:
            raise ConfigError(str(e)) from e

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError("config file must contain a JSON object")
        return cls.from_dict(data)

    def replace(self, **overrides) -> "PipelineConfig":
        return dataclasses.replace(self, **overrides)
