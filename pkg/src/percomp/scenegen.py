"""Deterministic synthetic scenes and two renderers: z-buffered primitive
splatting and planar-image homography views.

Scenes are laid out so the identity pose is the best-composed view: subjects
sit on the composition rubric's optimum and horizons are level. Rendering is a
pure function of (scene, intrinsics, pose); repeated calls are byte-equal.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .aesthetics import SubjectObservation
from .errors import DataError
from .frame import Frame
from .geometry import (
    CameraIntrinsics,
    CameraPose,
    homography_pure_rotation,
    warp_image,
)
from .trajgen import Trajectory, interpolate

BACKGROUND_COLOR = (128, 128, 128)
SKY_COLOR = (178, 200, 226)
GROUND_COLOR = (104, 122, 82)

TEMPLATES = ("single_subject", "multi_subject", "landscape")

# Default render intrinsics; scene templates place subjects at this camera's
# rubric optimum, so overriding K shifts the optimum slightly.
DEFAULT_INTRINSICS = CameraIntrinsics(
    fx=256.0, fy=256.0, cx=128.0, cy=128.0, width=256, height=256
)


class SceneError(DataError):
    pass


class UnknownTemplateError(SceneError):
    pass


class NonRotationalTrajectoryError(SceneError):
    pass


@dataclass(frozen=True)
class SceneElement:
    kind: str  # sphere | box | billboard
    center: tuple[float, float, float]
    size: float
    color: tuple[int, int, int]
    label: str = "background"  # subject | background

    def __post_init__(self) -> None:
        if self.kind not in ("sphere", "box", "billboard"):
            raise SceneError(f"unknown element kind {self.kind!r}")
        if self.size <= 0:
            raise SceneError("element size must be positive")
        if any(c < 0 or c > 255 for c in self.color):
            raise SceneError("color components must be in [0, 255]")
        if self.label not in ("subject", "background"):
            raise SceneError(f"unknown label {self.label!r}")


@dataclass
class Scene:
    elements: list[SceneElement]
    horizon: tuple[float, float, float] | None = None  # world up-normal of the ground plane
    seed: int = 0
    template: str = "single_subject"

    def subjects(self) -> list[SceneElement]:
        return [e for e in self.elements if e.label == "subject"]

    def to_json(self) -> str:
        return json.dumps(
            {
                "seed": self.seed,
                "template": self.template,
                "horizon": list(self.horizon) if self.horizon is not None else None,
                "elements": [
                    {
                        "kind": e.kind,
                        "center": list(e.center),
                        "size": e.size,
                        "color": list(e.color),
                        "label": e.label,
                    }
                    for e in self.elements
                ],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "Scene":
        data = json.loads(text)
        return cls(
            elements=[
                SceneElement(
                    kind=e["kind"],
                    center=tuple(e["center"]),
                    size=e["size"],
                    color=tuple(e["color"]),
                    label=e["label"],
                )
                for e in data["elements"]
            ],
            horizon=tuple(data["horizon"]) if data["horizon"] is not None else None,
            seed=data["seed"],
            template=data["template"],
        )


def _ray_through_pixel(K: CameraIntrinsics, u: float, v: float) -> np.ndarray:
    return np.array([(u - K.cx) / K.fx, (v - K.cy) / K.fy, 1.0])


def make_scene(seed: int, template: str, K: CameraIntrinsics = DEFAULT_INTRINSICS) -> Scene:
    """Build a deterministic scene for one of the three templates.

    single_subject: exactly one subject placed on the composition optimum of
    the identity view. multi_subject: 2-5 subjects balanced about the vertical
    midline. landscape: a level horizon, no subjects required.
    """
    if template not in TEMPLATES:
        raise UnknownTemplateError(f"unknown template {template!r}")
    rng = np.random.default_rng([seed, TEMPLATES.index(template)])
    elements: list[SceneElement] = []
    horizon = None

    def place(u, v, depth, size, label, kind="sphere"):
        center = _ray_through_pixel(K, u, v) * depth
        color = tuple(int(c) for c in rng.integers(40, 230, size=3))
        elements.append(
            SceneElement(kind, tuple(center), float(size), color, label)
        )

    w, h = K.width, K.height
    if template == "single_subject":
        depth = float(rng.uniform(5.0, 7.0))
        # rubric argmax of the frame score for a single subject: horizontally
        # centered, on the upper thirds line
        place(w / 2.0, h / 3.0, depth, rng.uniform(0.55, 0.8) * depth / 6.0, "subject")
        for _ in range(int(rng.integers(2, 5))):
            u = float(rng.uniform(0.05, 0.95)) * w
            v = float(rng.uniform(0.55, 0.95)) * h
            place(u, v, float(rng.uniform(10.0, 16.0)), rng.uniform(0.3, 0.9),
                  "background", kind=str(rng.choice(["box", "sphere"])))
    elif template == "multi_subject":
        count = int(rng.integers(2, 6))
        depth = float(rng.uniform(5.0, 8.0))
        offsets = rng.uniform(0.12, 0.3, size=(count + 1) // 2) * w
        for i in range(count):
            side = 1 if i % 2 == 0 else -1
            u = w / 2.0 + side * offsets[i // 2]
            v = h * float(rng.uniform(0.35, 0.55))
            place(u, v, depth, rng.uniform(0.4, 0.7) * depth / 6.0, "subject")
        for _ in range(int(rng.integers(1, 4))):
            place(float(rng.uniform(0.1, 0.9)) * w, float(rng.uniform(0.6, 0.95)) * h,
                  float(rng.uniform(11.0, 16.0)), rng.uniform(0.3, 0.8), "background",
                  kind="box")
    else:  # landscape
        horizon = (0.0, -1.0, 0.0)  # y is down, so up is -y; level by construction
        for _ in range(int(rng.integers(1, 4))):
            place(float(rng.uniform(0.15, 0.85)) * w, float(rng.uniform(0.52, 0.7)) * h,
                  float(rng.uniform(12.0, 20.0)), rng.uniform(0.4, 1.0), "background",
                  kind=str(rng.choice(["box", "billboard"])))

    return Scene(elements=elements, horizon=horizon, seed=seed, template=template)


def _splat_mask(kind: str, xs, ys, u, v, r):
    if kind == "sphere":
        return (xs - u) ** 2 + (ys - v) ** 2 <= r * r
    if kind == "box":
        return (np.abs(xs - u) <= r) & (np.abs(ys - v) <= r)
    # billboard: wide flat rectangle
    return (np.abs(xs - u) <= r) & (np.abs(ys - v) <= 0.45 * r)


def render(scene: Scene, K: CameraIntrinsics, pose: CameraPose) -> Frame:
    """Z-buffered splat rendering. Splat radius scales with 1/depth; the
    background is constant gray so clipping penalties stay meaningful."""
    w, h = K.width, K.height
    canvas = np.empty((h, w, 3), dtype=np.uint8)
    canvas[:, :] = np.asarray(BACKGROUND_COLOR, dtype=np.uint8)
    zbuf = np.full((h, w), np.inf)

    if scene.horizon is not None:
        _paint_horizon(canvas, K, pose, scene.horizon)

    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    for el in scene.elements:
        c = pose.to_camera(np.asarray(el.center))
        z = c[2]
        if z <= 1e-9:
            continue
        u = K.fx * c[0] / z + K.cx
        v = K.fy * c[1] / z + K.cy
        r = K.fx * el.size / z
        if u + r < 0 or u - r > w - 1 or v + r < 0 or v - r > h - 1:
            continue
        mask = _splat_mask(el.kind, xs, ys, u, v, r) & (z < zbuf)
        zbuf[mask] = z
        canvas[mask] = np.asarray(el.color, dtype=np.uint8)
    return Frame(canvas)


def _paint_horizon(canvas, K: CameraIntrinsics, pose: CameraPose, normal) -> None:
    h, w = canvas.shape[:2]
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    # world ray for every pixel: d_world = R^T K^-1 pix
    dirs = np.stack([(xs - K.cx) / K.fx, (ys - K.cy) / K.fy, np.ones_like(xs)], axis=-1)
    d_world = dirs @ pose.rotation  # (R^T d)^T = d^T R
    up = np.asarray(normal, dtype=np.float64)
    sky = d_world @ up > 0
    canvas[sky] = np.asarray(SKY_COLOR, dtype=np.uint8)
    canvas[~sky] = np.asarray(GROUND_COLOR, dtype=np.uint8)


def horizon_angle_degrees(
    scene: Scene, K: CameraIntrinsics, pose: CameraPose
) -> float | None:
    """In-image tilt of the horizon line, degrees in (-90, 90]; None when the
    scene has no horizon. 0 means level."""
    if scene.horizon is None:
        return None
    n_cam = pose.rotation @ np.asarray(scene.horizon, dtype=np.float64)
    a, b, _ = K.inverse_matrix().T @ n_cam  # image line coefficients
    if abs(a) < 1e-15 and abs(b) < 1e-15:
        return None  # camera looks along the plane normal; no horizon line
    ang = math.degrees(math.atan2(-a, b))
    ang = (ang + 90.0) % 180.0 - 90.0
    return ang


def observe_subjects(
    scene: Scene, K: CameraIntrinsics, pose: CameraPose
) -> list[SubjectObservation]:
    """Subject centroids/bboxes from scene metadata (no segmentation). Subjects
    whose centers project outside the frame or behind the camera are skipped."""
    out = []
    w, h = K.width, K.height
    for el in scene.subjects():
        c = pose.to_camera(np.asarray(el.center))
        z = c[2]
        if z <= 1e-9:
            continue
        u = K.fx * c[0] / z + K.cx
        v = K.fy * c[1] / z + K.cy
        if not (0 <= u < w and 0 <= v < h):
            continue
        r = K.fx * el.size / z
        x0, x1 = max(0.0, u - r), min(float(w - 1), u + r)
        y0, y1 = max(0.0, v - r), min(float(h - 1), v + r)
        if el.kind == "sphere":
            full_area = math.pi * r * r
        elif el.kind == "box":
            full_area = (2 * r) ** 2
        else:
            full_area = 2 * r * 0.9 * r
        visible = (x1 - x0 + 1) * (y1 - y0 + 1)
        area = min(full_area, visible) / float(w * h)
        out.append(
            SubjectObservation(
                centroid=(float(u), float(v)),
                bbox=(x0, y0, x1, y1),
                area_fraction=min(1.0, area),
            )
        )
    return out


def render_sequence(
    scene: Scene, K: CameraIntrinsics, traj: Trajectory, n: int
) -> tuple[list[Frame], list[CameraPose]]:
    """Render n frames at times k/(n-1) along the trajectory; the sampled poses
    are returned alongside the frames."""
    if n < 2:
        raise SceneError(f"need at least 2 frames, got {n}")
    poses = [interpolate(traj, k / (n - 1)) for k in range(n)]
    frames = [render(scene, K, p) for p in poses]
    return frames, poses


def planar_views(
    img: Frame, K: CameraIntrinsics, traj: Trajectory, n: int
) -> list[Frame]:
    """Homography views of a planar source image along a pure-rotation
    trajectory: frame k is the source warped by K R_k K^-1. The frame at the
    identity rotation is byte-equal to the source."""
    if n < 2:
        raise SceneError(f"need at least 2 frames, got {n}")
    if any(
        np.max(np.abs(k.pose.translation)) > 1e-12 for k in traj.keyframes
    ):
        raise NonRotationalTrajectoryError(
            "planar views require a pure-rotation trajectory"
        )
    frames = []
    for k in range(n):
        pose = interpolate(traj, k / (n - 1))
        H = homography_pure_rotation(K, pose.rotation)
        frames.append(warp_image(img, H, (img.width, img.height), BACKGROUND_COLOR))
    return frames
