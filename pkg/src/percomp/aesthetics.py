"""Rule-based scorers for the three sequence-quality dimensions: visual
quality (sharpness/clipping), motion quality (smoothness, static and
excessive-motion penalties), and composition aesthetic (rule of thirds,
horizontal balance, horizon levelness).

These are transparent stand-ins for a learned scorer; they emit raw scores on
a rubric scale which `calibrate` maps onto the grading bands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .frame import Frame, grayscale

DEFAULT_CA_WEIGHTS = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)

# Affine calibration of rubric-scale scores onto the grading-band scale.
CALIBRATION_OFFSET = -5.0
CALIBRATION_GAIN = 5.0


class ScoreError(DataError):
    pass


class EmptySequenceError(ScoreError):
    pass


class TooShortError(ScoreError):
    pass


class NothingToScoreError(ScoreError):
    pass


@dataclass(frozen=True)
class DimensionScores:
    vq: float
    mq: float
    ca: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.vq, self.mq, self.ca)):
            raise ScoreError("dimension scores must be finite")

    def to_dict(self) -> dict:
        return {"vq": self.vq, "mq": self.mq, "ca": self.ca}

    @classmethod
    def from_dict(cls, d: dict) -> "DimensionScores":
        return cls(vq=d["vq"], mq=d["mq"], ca=d["ca"])


@dataclass(frozen=True)
class SubjectObservation:
    centroid: tuple[float, float]
    bbox: tuple[float, float, float, float]  # x0, y0, x1, y1
    area_fraction: float

    def __post_init__(self) -> None:
        x0, y0, x1, y1 = self.bbox
        if x1 < x0 or y1 < y0:
            raise ScoreError("bbox is inverted")
        if not (0.0 <= self.area_fraction <= 1.0):
            raise ScoreError("area_fraction must be in [0, 1]")


@dataclass(frozen=True)
class FrameObservation:
    """Per-frame composition inputs: detected subjects plus the horizon tilt
    (degrees) when the frame has one."""

    subjects: tuple[SubjectObservation, ...] = ()
    horizon_angle: float | None = None

    def scorable(self) -> bool:
        return bool(self.subjects) or self.horizon_angle is not None


def laplacian_variance(frame: Frame) -> float:
    """Sharpness proxy: variance of the 4-neighbor Laplacian of luminance."""
    g = grayscale(frame)
    lap = (
        -4.0 * g[1:-1, 1:-1]
        + g[:-2, 1:-1]
        + g[2:, 1:-1]
        + g[1:-1, :-2]
        + g[1:-1, 2:]
    )
    return float(np.var(lap))


def clipped_fraction(frame: Frame) -> float:
    px = frame.pixels
    return float(np.mean((px == 0) | (px == 255)))


def vq_score(frames: list[Frame], clip_weight: float = 5.0) -> float:
    """Mean per-frame log-scaled Laplacian-variance sharpness minus a
    clipped-pixel penalty."""
    if not frames:
        raise EmptySequenceError("vq_score needs at least one frame")
    vals = [
        math.log10(1.0 + laplacian_variance(f)) - clip_weight * clipped_fraction(f)
        for f in frames
    ]
    return float(np.mean(vals))


def vq_sharpness_term(frames: list[Frame]) -> float:
    """The sharpness component of vq_score alone (used by artifact flagging)."""
    if not frames:
        raise EmptySequenceError("needs at least one frame")
    return float(np.mean([math.log10(1.0 + laplacian_variance(f)) for f in frames]))


def mq_score(
    per_frame_angles: list[float],
    budget: float = 30.0,
    static_threshold: float = 0.5,
    intensity_factor: float = 1.5,
    static_penalty: float = 5.0,
    intensity_penalty: float = 5.0,
) -> float:
    """Negative mean |second difference| of the per-frame rotation angles
    (jerk penalty), minus a static penalty when total motion < static_threshold
    degrees and an intensity penalty when it exceeds intensity_factor x budget."""
    if len(per_frame_angles) < 3:
        raise TooShortError("mq_score needs at least 3 angle samples")
    a = np.asarray(per_frame_angles, dtype=np.float64)
    jerk = float(np.mean(np.abs(np.diff(a, n=2))))
    total = float(a.max() - a.min())
    score = -jerk
    if total < static_threshold:
        score -= static_penalty
    if total > intensity_factor * budget:
        score -= intensity_penalty
    return score


def _thirds_term(centroid, width, height) -> float:
    xs = (width / 3.0, 2.0 * width / 3.0)
    ys = (height / 3.0, 2.0 * height / 3.0)
    d = min(math.hypot(centroid[0] - x, centroid[1] - y) for x in xs for y in ys)
    diag = math.hypot(width, height)
    return min(1.0, max(0.0, 1.0 - d / diag))


def _balance_term(subjects, width) -> float:
    weights = [max(s.area_fraction, 1e-12) for s in subjects]
    com = sum(w * s.centroid[0] for w, s in zip(weights, subjects)) / sum(weights)
    return min(1.0, max(0.0, 1.0 - abs(com - width / 2.0) / (width / 2.0)))


def _levelness_term(horizon_angle: float) -> float:
    return min(1.0, max(0.0, 1.0 - abs(horizon_angle) / 45.0))


def ca_frame_score(
    subjects: list[SubjectObservation] | tuple[SubjectObservation, ...],
    width: int,
    height: int,
    horizon_angle: float | None = None,
    weights: tuple[float, float, float] = DEFAULT_CA_WEIGHTS,
) -> float:
    """Composition score in [0, 1]: weighted thirds, balance, and levelness
    terms. Terms without inputs (no subjects / no horizon) are dropped and the
    remaining weights renormalized."""
    terms = []
    used = []
    if subjects:
        thirds = float(
            np.average(
                [_thirds_term(s.centroid, width, height) for s in subjects],
                weights=[max(s.area_fraction, 1e-12) for s in subjects],
            )
        )
        terms += [thirds, _balance_term(subjects, width)]
        used += [weights[0], weights[1]]
    if horizon_angle is not None:
        terms.append(_levelness_term(horizon_angle))
        used.append(weights[2])
    if not terms:
        raise NothingToScoreError("no subjects and no horizon to score")
    return float(np.dot(terms, used) / np.sum(used))


def ca_improvement(
    observations: list[FrameObservation],
    width: int,
    height: int,
    weights: tuple[float, float, float] = DEFAULT_CA_WEIGHTS,
) -> float:
    """Endpoint composition delta: frame score of the last scorable frame
    minus the first. Antisymmetric under sequence reversal."""
    scorable = [o for o in observations if o.scorable()]
    if len(scorable) < 2:
        raise TooShortError("ca_improvement needs at least 2 scorable frames")

    def score(o: FrameObservation) -> float:
        return ca_frame_score(o.subjects, width, height, o.horizon_angle, weights)

    return score(scorable[-1]) - score(scorable[0])


def calibrate(
    raw: float, offset: float = CALIBRATION_OFFSET, gain: float = CALIBRATION_GAIN
) -> float:
    """Map a rubric-scale score onto the grading-band scale."""
    return offset + gain * raw
