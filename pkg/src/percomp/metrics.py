"""Evaluation metrics: PSNR, SSIM (non-overlapping windows), camera-motion
classification on pose pairs or tracked correspondences, and camera motion
matching (CMM) accuracy between two label sequences.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import DataError
from .frame import Frame, grayscale
from .geometry import (
    CameraIntrinsics,
    CameraPose,
    NotRotationalError,
    estimate_homography_dlt,
    pan_tilt_roll_degrees,
    project_many,
    rotation_matrix_from_homography,
)

PSNR_CAP_DB = 100.0
DEFAULT_STATIC_THRESHOLD_DEG = 0.1
DEFAULT_ZOOM_THRESHOLD = 0.02


class MetricError(DataError):
    pass


class DimMismatchError(MetricError):
    pass


class TooSmallError(MetricError):
    pass


class LengthMismatchError(MetricError):
    pass


class MotionLabel(str, Enum):
    PAN_LEFT = "PAN_LEFT"
    PAN_RIGHT = "PAN_RIGHT"
    TILT_UP = "TILT_UP"
    TILT_DOWN = "TILT_DOWN"
    ROLL_CW = "ROLL_CW"
    ROLL_CCW = "ROLL_CCW"
    ZOOM_IN = "ZOOM_IN"
    ZOOM_OUT = "ZOOM_OUT"
    STATIC = "STATIC"


REVERSED_LABEL = {
    MotionLabel.PAN_LEFT: MotionLabel.PAN_RIGHT,
    MotionLabel.PAN_RIGHT: MotionLabel.PAN_LEFT,
    MotionLabel.TILT_UP: MotionLabel.TILT_DOWN,
    MotionLabel.TILT_DOWN: MotionLabel.TILT_UP,
    MotionLabel.ROLL_CW: MotionLabel.ROLL_CCW,
    MotionLabel.ROLL_CCW: MotionLabel.ROLL_CW,
    MotionLabel.ZOOM_IN: MotionLabel.ZOOM_OUT,
    MotionLabel.ZOOM_OUT: MotionLabel.ZOOM_IN,
    MotionLabel.STATIC: MotionLabel.STATIC,
}


class PsnrResult(NamedTuple):
    db: float
    exact: bool


def psnr(a: Frame, b: Frame) -> PsnrResult:
    """10 log10(255^2 / MSE) over all channels, capped at 100 dB; identical
    frames report the cap with the exact flag set."""
    if a.pixels.shape != b.pixels.shape:
        raise DimMismatchError(f"{a.pixels.shape} vs {b.pixels.shape}")
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return PsnrResult(PSNR_CAP_DB, True)
    return PsnrResult(min(PSNR_CAP_DB, 10.0 * math.log10(255.0**2 / mse)), False)


def ssim(
    a: Frame,
    b: Frame,
    window: int = 8,
    k1: float = 0.01,
    k2: float = 0.03,
    L: float = 255.0,
) -> float:
    """Mean SSIM over non-overlapping window x window blocks of the luminance
    images (trailing partial blocks are dropped)."""
    if a.pixels.shape != b.pixels.shape:
        raise DimMismatchError(f"{a.pixels.shape} vs {b.pixels.shape}")
    if a.height < window or a.width < window:
        raise TooSmallError(f"frame smaller than the {window}x{window} window")
    ga, gb = grayscale(a), grayscale(b)
    h = (ga.shape[0] // window) * window
    w = (ga.shape[1] // window) * window
    ga = ga[:h, :w].reshape(h // window, window, w // window, window)
    gb = gb[:h, :w].reshape(h // window, window, w // window, window)

    mu_a = ga.mean(axis=(1, 3))
    mu_b = gb.mean(axis=(1, 3))
    # second moments computed the same way as the covariance so that
    # identical inputs give num == den bit-exactly (SSIM 1.0)
    var_a = (ga * ga).mean(axis=(1, 3)) - mu_a * mu_a
    var_b = (gb * gb).mean(axis=(1, 3)) - mu_b * mu_b
    cov = (ga * gb).mean(axis=(1, 3)) - mu_a * mu_b

    c1 = (k1 * L) ** 2
    c2 = (k2 * L) ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


# ---------------------------------------------------------------------------
# camera motion classification


def _label_from_rotation(R_rel: np.ndarray, static_threshold: float) -> MotionLabel | None:
    pan, tilt, roll = pan_tilt_roll_degrees(R_rel)
    mags = [abs(pan), abs(tilt), abs(roll)]
    if max(mags) < static_threshold:
        return None
    axis = int(np.argmax(mags))
    if axis == 0:
        return MotionLabel.PAN_RIGHT if pan > 0 else MotionLabel.PAN_LEFT
    if axis == 1:
        return MotionLabel.TILT_UP if tilt > 0 else MotionLabel.TILT_DOWN
    return MotionLabel.ROLL_CW if roll > 0 else MotionLabel.ROLL_CCW


def classify_motion_poses(
    poses: list[CameraPose],
    static_threshold: float = DEFAULT_STATIC_THRESHOLD_DEG,
) -> list[MotionLabel]:
    """One dominant-axis motion label per consecutive pose pair; intervals with
    all rotation components below static_threshold degrees are STATIC."""
    if len(poses) < 2:
        raise MetricError("need at least 2 poses")
    labels = []
    for p1, p2 in zip(poses, poses[1:]):
        R_rel = p2.rotation @ p1.rotation.T
        labels.append(_label_from_rotation(R_rel, static_threshold) or MotionLabel.STATIC)
    return labels


def classify_motion_correspondences(
    interval_pairs: list[list[tuple[np.ndarray, np.ndarray]]],
    K: CameraIntrinsics,
    static_threshold: float = DEFAULT_STATIC_THRESHOLD_DEG,
    zoom_threshold: float = DEFAULT_ZOOM_THRESHOLD,
) -> list[MotionLabel]:
    """Frame-path classification: per interval, a homography is estimated from
    the tracked correspondences; if its K-conjugate is (nearly) a rotation the
    dominant axis wins, otherwise the focal-scale factor of H decides between
    zoom labels and STATIC."""
    if not interval_pairs:
        raise MetricError("need at least 1 interval of correspondences")
    labels = []
    for pairs in interval_pairs:
        H = estimate_homography_dlt(pairs)
        label: MotionLabel | None = None
        try:
            R_rel = rotation_matrix_from_homography(K, H)
            label = _label_from_rotation(R_rel, static_threshold)
        except NotRotationalError:
            pass
        if label is None:
            scale = _focal_scale(H.matrix())
            if scale > 1.0 + zoom_threshold:
                label = MotionLabel.ZOOM_IN
            elif scale < 1.0 - zoom_threshold:
                label = MotionLabel.ZOOM_OUT
            else:
                label = MotionLabel.STATIC
        labels.append(label)
    return labels


def _focal_scale(h: np.ndarray) -> float:
    det2 = h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
    return math.sqrt(abs(det2))


def grid_correspondences(
    K: CameraIntrinsics,
    pose_a: CameraPose,
    pose_b: CameraPose,
    rows: int = 5,
    cols: int = 5,
    depth: float = 10.0,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Synthetic tracked grid: back-project a pixel grid of view A at a fixed
    depth and reproject the world points into view B."""
    us = np.linspace(0.15 * K.width, 0.85 * K.width, cols)
    vs = np.linspace(0.15 * K.height, 0.85 * K.height, rows)
    uu, vv = np.meshgrid(us, vs)
    rays = np.stack(
        [(uu.ravel() - K.cx) / K.fx, (vv.ravel() - K.cy) / K.fy, np.ones(rows * cols)],
        axis=1,
    )
    cam_pts = rays * depth
    world = (cam_pts - pose_a.translation) @ pose_a.rotation  # R^T (p - t)
    src = np.stack([uu.ravel(), vv.ravel()], axis=1)
    dst = project_many(K, pose_b, world)
    return [(src[i], dst[i]) for i in range(src.shape[0])]


def cmm(pred: list[MotionLabel], gt: list[MotionLabel]) -> float:
    """Fraction of intervals whose motion labels match."""
    if len(pred) != len(gt):
        raise LengthMismatchError(f"{len(pred)} vs {len(gt)} labels")
    if not pred:
        raise LengthMismatchError("label lists must be non-empty")
    return sum(p == g for p, g in zip(pred, gt)) / len(pred)


@dataclass
class MetricReport:
    psnr: float
    ssim: float
    cmm: float
    accuracy: dict[str, float] = field(default_factory=dict)
    psnr_exact: bool = False

    def to_json(self) -> str:
        return json.dumps(
            {
                "psnr": self.psnr,
                "ssim": self.ssim,
                "cmm": self.cmm,
                "accuracy": self.accuracy,
                "psnr_exact": self.psnr_exact,
            },
            indent=2,
        )


def compare_sequences(
    pred_frames: list[Frame],
    gt_frames: list[Frame],
    pred_poses: list[CameraPose],
    gt_poses: list[CameraPose],
    accuracy: dict[str, float] | None = None,
) -> MetricReport:
    """Frame-wise mean PSNR/SSIM plus CMM between the motion labels of the two
    pose paths."""
    if len(pred_frames) != len(gt_frames):
        raise LengthMismatchError("frame counts differ")
    results = [psnr(p, g) for p, g in zip(pred_frames, gt_frames)]
    ssims = [ssim(p, g) for p, g in zip(pred_frames, gt_frames)]
    labels_pred = classify_motion_poses(pred_poses)
    labels_gt = classify_motion_poses(gt_poses)
    return MetricReport(
        psnr=float(np.mean([r.db for r in results])),
        ssim=float(np.mean(ssims)),
        cmm=cmm(labels_pred, labels_gt),
        accuracy=accuracy or {},
        psnr_exact=all(r.exact for r in results),
    )
