"""Pinhole projection, homography estimation and application, guidance-box
warping, and rotation-angle extraction.

Conventions:
  - camera frame: x right, y down, z forward (optical axis); units are pixels
    in image space, arbitrary scene units in 3D.
  - CameraPose maps world to camera: x_cam = R @ x_world + t.
  - Homographies map source pixels to destination pixels; stored normalized
    with h33 = 1 where possible, else unit Frobenius norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import DataError
from .frame import Frame

# Residual above which a scale-normalized K^-1 H K is rejected as a rotation.
# Config-overridable through the rotation_angle_from_homography argument.
DEFAULT_ROTATION_RESIDUAL_TOL = 0.1


class GeometryError(DataError):
    pass


class BehindCameraError(GeometryError):
    pass


class InsufficientPointsError(GeometryError):
    pass


class DegenerateConfigurationError(GeometryError):
    pass


class PointAtInfinityError(GeometryError):
    pass


class DegenerateQuadError(GeometryError):
    pass


class NotRotationalError(GeometryError):
    pass


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.fx <= 0 or self.fy <= 0:
            raise GeometryError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise GeometryError("principal point must lie inside the image")

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    def inverse_matrix(self) -> np.ndarray:
        # Analytic inverse; better conditioned than a generic solve.
        return np.array(
            [
                [1.0 / self.fx, 0.0, -self.cx / self.fx],
                [0.0, 1.0 / self.fy, -self.cy / self.fy],
                [0.0, 0.0, 1.0],
            ]
        )


class CameraPose:
    """Rigid world-to-camera transform. Rotation is checked for orthonormality
    and positive determinant at construction (tolerance 1e-9)."""

    __slots__ = ("rotation", "translation")

    def __init__(self, rotation: np.ndarray, translation: np.ndarray | None = None):
        R = np.array(rotation, dtype=np.float64)
        t = (
            np.zeros(3)
            if translation is None
            else np.array(translation, dtype=np.float64)
        )
        if R.shape != (3, 3):
            raise GeometryError(f"rotation must be 3x3, got {R.shape}")
        if t.shape != (3,):
            raise GeometryError(f"translation must be a 3-vector, got {t.shape}")
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-9:
            raise GeometryError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise GeometryError("rotation must have determinant +1")
        R.setflags(write=False)
        t.setflags(write=False)
        self.rotation = R
        self.translation = t

    @classmethod
    def identity(cls) -> "CameraPose":
        return cls(np.eye(3), np.zeros(3))

    def to_camera(self, points: np.ndarray) -> np.ndarray:
        """Map world points (..., 3) into the camera frame."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation.T + self.translation

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CameraPose):
            return NotImplemented
        return np.array_equal(self.rotation, other.rotation) and np.array_equal(
            self.translation, other.translation
        )


class Homography:
    """3x3 projective map, non-singular, stored in canonical scale."""

    __slots__ = ("h",)

    def __init__(self, h: np.ndarray):
        m = np.array(h, dtype=np.float64)
        if m.shape != (3, 3):
            raise GeometryError(f"homography must be 3x3, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise GeometryError("homography entries must be finite")
        if abs(np.linalg.det(m)) <= 1e-12:
            raise DegenerateConfigurationError("homography is singular")
        if abs(m[2, 2]) > 1e-9:
            m = m / m[2, 2]
        else:
            m = m / np.linalg.norm(m)
        m.setflags(write=False)
        self.h = m

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    def matrix(self) -> np.ndarray:
        return self.h

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.h))

    def __matmul__(self, other: "Homography") -> "Homography":
        return Homography(self.h @ other.h)


@dataclass(frozen=True)
class Quad:
    """Four ordered pixel corners, clockwise starting top-left."""

    corners: np.ndarray

    def __post_init__(self) -> None:
        c = np.array(self.corners, dtype=np.float64)
        if c.shape != (4, 2):
            raise GeometryError(f"quad needs exactly 4 corners, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise GeometryError("quad corners must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "corners", c)

    @classmethod
    def from_rect(cls, x0: float, y0: float, x1: float, y1: float) -> "Quad":
        return cls(np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Quad):
            return NotImplemented
        return np.array_equal(self.corners, other.corners)


# ---------------------------------------------------------------------------
# rotation helpers


def so3_exp(rotvec: np.ndarray) -> np.ndarray:
    """Rotation matrix from a rotation vector (radians)."""
    return Rotation.from_rotvec(np.asarray(rotvec, dtype=np.float64)).as_matrix()


def so3_log(R: np.ndarray) -> np.ndarray:
    """Rotation vector (radians) of a rotation matrix."""
    return Rotation.from_matrix(np.asarray(R, dtype=np.float64)).as_rotvec()


def geodesic_angle_degrees(Ra: np.ndarray, Rb: np.ndarray) -> float:
    """Geodesic distance between two rotations, in degrees."""
    cos = (np.trace(np.asarray(Ra) @ np.asarray(Rb).T) - 1.0) / 2.0
    return math.degrees(math.acos(min(1.0, max(-1.0, cos))))


def pan_tilt_roll_degrees(R_rel: np.ndarray) -> tuple[float, float, float]:
    """Rotation-vector decomposition of a relative camera rotation.

    pan > 0: view direction moves right; tilt > 0: view moves up;
    roll > 0: image content rotates clockwise (y-down screen coordinates).
    """
    rx, ry, rz = np.degrees(so3_log(R_rel))
    return (-ry, -rx, rz)


def rotation_pan_tilt_roll(
    pan: float = 0.0, tilt: float = 0.0, roll: float = 0.0
) -> np.ndarray:
    """Inverse of pan_tilt_roll_degrees for single- or mixed-axis motions."""
    return so3_exp(np.radians([-tilt, -pan, roll]))


def nearest_rotation(M: np.ndarray) -> np.ndarray:
    """Orthogonal Procrustes projection of M onto SO(3)."""
    U, _, Vt = np.linalg.svd(np.asarray(M, dtype=np.float64))
    R = U @ Vt
    if np.linalg.det(R) < 0:
        R = U @ np.diag([1.0, 1.0, -1.0]) @ Vt
    return R


# ---------------------------------------------------------------------------
# projection and homographies


def project(K: CameraIntrinsics, pose: CameraPose, point: np.ndarray) -> np.ndarray:
    """Pinhole-project a world point to pixel coordinates.

    Raises BehindCameraError when the point's camera-frame depth is <= 1e-9.
    """
    p = pose.to_camera(np.asarray(point, dtype=np.float64))
    if p[2] <= 1e-9:
        raise BehindCameraError(f"point depth {p[2]:g} is not in front of the camera")
    return np.array([K.fx * p[0] / p[2] + K.cx, K.fy * p[1] / p[2] + K.cy])


def project_many(K: CameraIntrinsics, pose: CameraPose, points: np.ndarray) -> np.ndarray:
    """Vectorized project() for an (n, 3) array; all depths must be positive."""
    p = pose.to_camera(np.asarray(points, dtype=np.float64))
    if np.any(p[:, 2] <= 1e-9):
        raise BehindCameraError("at least one point is behind the camera")
    return np.stack(
        [K.fx * p[:, 0] / p[:, 2] + K.cx, K.fy * p[:, 1] / p[:, 2] + K.cy], axis=1
    )


def homography_pure_rotation(K: CameraIntrinsics, R_rel: np.ndarray) -> Homography:
    """Homography K @ R_rel @ K^-1 mapping pixels of the reference view onto the
    view rotated by R_rel (camera-frame relative rotation)."""
    R = np.asarray(R_rel, dtype=np.float64)
    if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-9:
        raise GeometryError("R_rel is not orthonormal")
    if np.array_equal(R, np.eye(3)):
        return Homography.identity()  # keeps identity warps bit-exact
    return Homography(K.matrix() @ R @ K.inverse_matrix())


def estimate_homography_dlt(
    pairs: list[tuple[np.ndarray, np.ndarray]],
) -> Homography:
    """Direct linear transform with Hartley pre-normalization.

    pairs: (source_pixel, destination_pixel) correspondences, n >= 4.
    The smallest-singular-direction solution of the stacked 2n x 9 system is
    returned; a rank-deficient system (collinear or coincident sources) raises
    DegenerateConfigurationError.
    """
    if len(pairs) < 4:
        raise InsufficientPointsError(f"need >= 4 correspondences, got {len(pairs)}")
    src = np.array([p[0] for p in pairs], dtype=np.float64)
    dst = np.array([p[1] for p in pairs], dtype=np.float64)

    Ts, srcn = _hartley_normalize(src)
    Td, dstn = _hartley_normalize(dst)

    n = len(pairs)
    A = np.zeros((2 * n, 9))
    x, y = srcn[:, 0], srcn[:, 1]
    u, v = dstn[:, 0], dstn[:, 1]
    A[0::2, 0] = -x
    A[0::2, 1] = -y
    A[0::2, 2] = -1.0
    A[0::2, 6] = u * x
    A[0::2, 7] = u * y
    A[0::2, 8] = u
    A[1::2, 3] = -x
    A[1::2, 4] = -y
    A[1::2, 5] = -1.0
    A[1::2, 6] = v * x
    A[1::2, 7] = v * y
    A[1::2, 8] = v

    _, S, Vt = np.linalg.svd(A)
    # A unique (up to scale) solution requires rank 8: the 8th singular value
    # must be well separated from zero.
    if len(S) < 8 or S[7] <= 1e-9 * max(S[0], 1e-30):
        raise DegenerateConfigurationError(
            "correspondences do not determine a homography (degenerate configuration)"
        )
    H = Vt[-1].reshape(3, 3)
    return Homography(np.linalg.inv(Td) @ H @ Ts)


def _hartley_normalize(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Translate centroid to the origin and scale mean distance to sqrt(2)."""
    c = pts.mean(axis=0)
    d = np.linalg.norm(pts - c, axis=1).mean()
    s = math.sqrt(2.0) / d if d > 1e-12 else 1.0
    T = np.array([[s, 0.0, -s * c[0]], [0.0, s, -s * c[1]], [0.0, 0.0, 1.0]])
    return T, (pts - c) * s


def apply_homography(H: Homography, p):
    """Apply a homography to a pixel (2-vector) or corner-wise to a Quad."""
    if isinstance(p, Quad):
        return Quad(_apply_h_points(H.h, p.corners))
    return _apply_h_points(H.h, np.asarray(p, dtype=np.float64).reshape(1, 2))[0]


def _apply_h_points(h: np.ndarray, pts: np.ndarray) -> np.ndarray:
    ones = np.ones((pts.shape[0], 1))
    hp = np.hstack([pts, ones]) @ h.T
    w = hp[:, 2]
    if np.any(np.abs(w) < 1e-12):
        raise PointAtInfinityError("homography maps a point to infinity")
    return hp[:, :2] / w[:, None]


def warp_image(
    img: Frame,
    H: Homography,
    out_size: tuple[int, int] | None = None,
    fill=(128, 128, 128),
) -> Frame:
    """Warp img by H (source pixels -> output pixels) with inverse mapping and
    bilinear resampling; samples outside the source take the fill color."""
    out_w, out_h = out_size if out_size is not None else (img.width, img.height)
    Hinv = np.linalg.inv(H.h)

    xs, ys = np.meshgrid(
        np.arange(out_w, dtype=np.float64), np.arange(out_h, dtype=np.float64)
    )
    denom = Hinv[2, 0] * xs + Hinv[2, 1] * ys + Hinv[2, 2]
    ok = np.abs(denom) > 1e-12
    safe = np.where(ok, denom, 1.0)
    sx = (Hinv[0, 0] * xs + Hinv[0, 1] * ys + Hinv[0, 2]) / safe
    sy = (Hinv[1, 0] * xs + Hinv[1, 1] * ys + Hinv[1, 2]) / safe

    w, h = img.width, img.height
    inside = ok & (sx >= 0) & (sx <= w - 1) & (sy >= 0) & (sy <= h - 1)

    x0 = np.clip(np.floor(sx), 0, w - 1).astype(np.intp)
    y0 = np.clip(np.floor(sy), 0, h - 1).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    wx = np.clip(sx - x0, 0.0, 1.0)[:, :, None]
    wy = np.clip(sy - y0, 0.0, 1.0)[:, :, None]

    px = img.pixels.astype(np.float64)
    top = px[y0, x0] * (1.0 - wx) + px[y0, x1] * wx
    bot = px[y1, x0] * (1.0 - wx) + px[y1, x1] * wx
    val = top * (1.0 - wy) + bot * wy

    out = np.empty((out_h, out_w, 3), dtype=np.uint8)
    fill_arr = np.asarray(fill, dtype=np.float64)
    val = np.where(inside[:, :, None], val, fill_arr)
    np.rint(val, out=val)
    out[:] = np.clip(val, 0, 255).astype(np.uint8)
    return Frame(out)


def guidance_box(optimal_rect: Quad, H_cur_from_opt: Homography) -> Quad:
    """Warp the guidance rectangle drawn on the optimal view into the current
    view. As the current view approaches the optimal one (H -> I) the output's
    rectangularity approaches 1."""
    c = optimal_rect.corners
    if not (
        c[0, 1] == c[1, 1] and c[2, 1] == c[3, 1] and c[0, 0] == c[3, 0] and c[1, 0] == c[2, 0]
    ):
        raise GeometryError("guidance rectangle must be axis-aligned")
    return apply_homography(H_cur_from_opt, optimal_rect)


def rectangularity(q: Quad) -> float:
    """1 - (sum of corner-angle deviations from 90 degrees) / 360, clamped to
    [0, 1]. Rectangles score exactly 1."""
    c = q.corners
    area = 0.5 * abs(
        np.dot(c[:, 0], np.roll(c[:, 1], -1)) - np.dot(c[:, 1], np.roll(c[:, 0], -1))
    )
    if area < 1e-12:
        raise DegenerateQuadError("quad has zero area")
    total_dev = 0.0
    for i in range(4):
        prev = c[i - 1] - c[i]
        nxt = c[(i + 1) % 4] - c[i]
        np_, nn = np.linalg.norm(prev), np.linalg.norm(nxt)
        if np_ < 1e-12 or nn < 1e-12:
            raise DegenerateQuadError("quad has coincident corners")
        cos = np.dot(prev, nxt) / (np_ * nn)
        ang = math.degrees(math.acos(min(1.0, max(-1.0, cos))))
        total_dev += abs(ang - 90.0)
    return min(1.0, max(0.0, 1.0 - total_dev / 360.0))


def rotation_angle_from_homography(
    K: CameraIntrinsics,
    H: Homography,
    residual_tol: float = DEFAULT_ROTATION_RESIDUAL_TOL,
) -> float:
    """Rotation angle (degrees) of a rotation-only homography.

    K^-1 H K is scale-normalized to unit determinant and projected onto SO(3)
    by orthogonal Procrustes; if the projection residual exceeds residual_tol
    (Frobenius norm) the homography is rejected as NotRotationalError.
    """
    M = K.inverse_matrix() @ H.matrix() @ K.matrix()
    det = np.linalg.det(M)
    s = np.cbrt(det)
    if not np.isfinite(s) or abs(s) < 1e-12:
        raise NotRotationalError("homography conjugate has vanishing determinant")
    Mn = M / s
    R = nearest_rotation(Mn)
    residual = np.linalg.norm(Mn - R)
    if residual > residual_tol:
        raise NotRotationalError(
            f"residual {residual:.4f} exceeds {residual_tol:g}; not a pure rotation"
        )
    cos = (np.trace(R) - 1.0) / 2.0
    return math.degrees(math.acos(min(1.0, max(-1.0, cos))))


def rotation_matrix_from_homography(
    K: CameraIntrinsics,
    H: Homography,
    residual_tol: float = DEFAULT_ROTATION_RESIDUAL_TOL,
) -> np.ndarray:
    """Nearest relative rotation matrix for a rotation-only homography."""
    M = K.inverse_matrix() @ H.matrix() @ K.matrix()
    det = np.linalg.det(M)
    s = np.cbrt(det)
    if not np.isfinite(s) or abs(s) < 1e-12:
        raise NotRotationalError("homography conjugate has vanishing determinant")
    Mn = M / s
    R = nearest_rotation(Mn)
    if np.linalg.norm(Mn - R) > residual_tol:
        raise NotRotationalError("not a pure rotation")
    return R
