"""Random camera trajectories within an angle budget, and their reversal
into suboptimal-to-optimal training sequences.

Rotations are random-walked in rotation-vector space relative to the start
pose, then rescaled so the largest deviation from the start equals the budget
exactly (rejection-free). Translations get the same treatment when a nonzero
translation budget is configured; the default is the pure-rotation regime so
planar homography ground truth stays exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import DataError
from .geometry import CameraPose, geodesic_angle_degrees, so3_exp

MIX = "mix"
MIX_CAPS_DEGREES = (10.0, 20.0, 30.0)


class TrajectoryError(DataError):
    pass


class InvalidBudgetError(TrajectoryError):
    pass


class OutOfRangeError(TrajectoryError):
    pass


@dataclass(frozen=True)
class Keyframe:
    t: float
    pose: CameraPose


class Trajectory:
    """Timed pose path. Keyframe times are strictly increasing; multi-keyframe
    trajectories span [0, 1] exactly."""

    __slots__ = ("keyframes",)

    def __init__(self, keyframes: list[Keyframe]):
        if not keyframes:
            raise TrajectoryError("trajectory needs at least one keyframe")
        ts = [k.t for k in keyframes]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise TrajectoryError("keyframe times must be strictly increasing")
        if any(t < 0.0 or t > 1.0 for t in ts):
            raise TrajectoryError("keyframe times must lie in [0, 1]")
        if len(keyframes) >= 2 and (ts[0] != 0.0 or ts[-1] != 1.0):
            raise TrajectoryError("trajectory must start at t=0 and end at t=1")
        self.keyframes = list(keyframes)

    def __len__(self) -> int:
        return len(self.keyframes)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return len(self) == len(other) and all(
            a.t == b.t and a.pose == b.pose
            for a, b in zip(self.keyframes, other.keyframes)
        )


@dataclass(frozen=True)
class AngleBudget:
    max_rotation: float  # degrees
    max_translation: float = 0.0  # scene units

    def __post_init__(self) -> None:
        if not (self.max_rotation > 0):
            raise InvalidBudgetError(
                f"max_rotation must be positive, got {self.max_rotation!r}"
            )
        if self.max_translation < 0:
            raise InvalidBudgetError("max_translation must be >= 0")


PRESETS = {
    "10": AngleBudget(10.0),
    "20": AngleBudget(20.0),
    "30": AngleBudget(30.0),
}


def resolve_budget(
    budget: AngleBudget | str | float,
    rng: np.random.Generator,
    max_translation: float = 0.0,
) -> AngleBudget:
    """Resolve a budget spec; MIX draws a per-sample cap uniformly from
    {10, 20, 30} degrees."""
    if isinstance(budget, AngleBudget):
        return budget
    if isinstance(budget, str):
        key = budget.lower()
        if key == MIX:
            cap = float(rng.choice(MIX_CAPS_DEGREES))
            return AngleBudget(cap, max_translation)
        if key in PRESETS:
            p = PRESETS[key]
            return AngleBudget(p.max_rotation, max_translation)
        raise InvalidBudgetError(f"unknown budget preset {budget!r}")
    return AngleBudget(float(budget), max_translation)


def _bounded_walk(rng: np.random.Generator, steps: int, cap: float) -> np.ndarray:
    """Random walk in R^3 from the origin, rescaled so max ||v_k|| == cap."""
    deltas = rng.normal(size=(steps - 1, 3))
    norms = np.linalg.norm(deltas, axis=1, keepdims=True)
    norms[norms < 1e-12] = 1.0
    deltas = deltas / norms * rng.uniform(0.5, 1.0, size=(steps - 1, 1))
    path = np.vstack([np.zeros(3), np.cumsum(deltas, axis=0)])
    peak = np.linalg.norm(path, axis=1).max()
    if peak < 1e-12 or cap == 0.0:
        return np.zeros_like(path)
    return path * (cap / peak)


def sample_away_trajectory(
    start: CameraPose,
    budget: AngleBudget | str | float,
    steps: int,
    rng: np.random.Generator,
) -> Trajectory:
    """Sample a random optimal-to-suboptimal trajectory.

    Keyframe 0 is the start pose; the maximum geodesic rotation from the start
    over all keyframes equals the (resolved) rotation cap, and translation
    deviation is bounded by the translation budget. Deterministic given the
    generator state.
    """
    if steps < 2:
        raise TrajectoryError(f"steps must be >= 2, got {steps}")
    b = resolve_budget(budget, rng)

    rot_path = _bounded_walk(rng, steps, math.radians(b.max_rotation))
    if b.max_translation > 0:
        trans_path = _bounded_walk(rng, steps, b.max_translation)
    else:
        trans_path = np.zeros((steps, 3))

    keyframes = [Keyframe(0.0, start)]
    for k in range(1, steps):
        R = so3_exp(rot_path[k]) @ start.rotation
        t = start.translation + trans_path[k]
        keyframes.append(Keyframe(k / (steps - 1), CameraPose(R, t)))
    return Trajectory(keyframes)


def reverse(traj: Trajectory) -> Trajectory:
    """Reverse the pose order and map each time t to 1 - t.

    On complement-symmetric time grids (uniform grids included) the original
    float time values are reused, which makes reversal an exact involution.
    """
    kfs = traj.keyframes
    n = len(kfs)
    if n == 1:
        return Trajectory(list(kfs))
    ts = [k.t for k in kfs]
    symmetric = all(abs(ts[i] + ts[n - 1 - i] - 1.0) <= 4e-16 for i in range(n))
    if symmetric:
        new_ts = ts
    else:
        new_ts = [1.0 - ts[n - 1 - i] for i in range(n)]
    return Trajectory(
        [Keyframe(new_ts[i], kfs[n - 1 - i].pose) for i in range(n)]
    )


def _slerp(Ra: np.ndarray, Rb: np.ndarray, u: float) -> np.ndarray:
    qa = Rotation.from_matrix(Ra).as_quat()
    qb = Rotation.from_matrix(Rb).as_quat()
    dot = float(np.dot(qa, qb))
    if dot < 0.0:
        qb, dot = -qb, -dot
    dot = min(1.0, dot)
    omega = math.acos(dot)
    if omega < 1e-12:
        q = (1.0 - u) * qa + u * qb
    else:
        s = math.sin(omega)
        q = (math.sin((1.0 - u) * omega) / s) * qa + (math.sin(u * omega) / s) * qb
    q /= np.linalg.norm(q)
    return Rotation.from_quat(q).as_matrix()


def interpolate(traj: Trajectory, t: float) -> CameraPose:
    """Pose at time t: spherical interpolation of rotations, linear
    interpolation of translations between bracketing keyframes. Exact keyframe
    hits return the stored pose unchanged."""
    if t < 0.0 or t > 1.0:
        raise OutOfRangeError(f"t={t!r} outside [0, 1]")
    kfs = traj.keyframes
    if len(kfs) == 1:
        return kfs[0].pose
    ts = [k.t for k in kfs]
    idx = int(np.searchsorted(ts, t))
    if idx < len(ts) and ts[idx] == t:
        return kfs[idx].pose
    a, b = kfs[idx - 1], kfs[idx]
    u = (t - a.t) / (b.t - a.t)
    R = _slerp(a.pose.rotation, b.pose.rotation, u)
    trans = (1.0 - u) * a.pose.translation + u * b.pose.translation
    return CameraPose(R, trans)


def max_rotation(traj: Trajectory) -> float:
    """Largest geodesic rotation (degrees) of any keyframe relative to
    keyframe 0."""
    base = traj.keyframes[0].pose.rotation
    return max(
        (geodesic_angle_degrees(k.pose.rotation, base) for k in traj.keyframes),
        default=0.0,
    )


# ---------------------------------------------------------------------------
# serialization: JSON array of {t, quaternion(w,x,y,z), translation[3]}


def _canonical_quat_wxyz(R: np.ndarray) -> list[float]:
    x, y, z, w = Rotation.from_matrix(R).as_quat()
    q = np.array([w, x, y, z])
    q /= np.linalg.norm(q)
    if q[0] < 0 or (q[0] == 0 and _first_nonzero_negative(q)):
        q = -q
    return [float(v) for v in q]


def _first_nonzero_negative(q: np.ndarray) -> bool:
    for v in q[1:]:
        if v != 0:
            return v < 0
    return False


def trajectory_to_obj(traj: Trajectory) -> list[dict]:
    return [
        {
            "t": k.t,
            "quaternion": _canonical_quat_wxyz(k.pose.rotation),
            "translation": [float(v) for v in k.pose.translation],
        }
        for k in traj.keyframes
    ]


def trajectory_from_obj(obj: list[dict]) -> Trajectory:
    kfs = []
    for row in obj:
        w, x, y, z = row["quaternion"]
        R = Rotation.from_quat([x, y, z, w]).as_matrix()
        kfs.append(Keyframe(float(row["t"]), CameraPose(R, row["translation"])))
    return Trajectory(kfs)


def trajectory_to_json(traj: Trajectory) -> str:
    return json.dumps(trajectory_to_obj(traj))


def trajectory_from_json(text: str) -> Trajectory:
    return trajectory_from_obj(json.loads(text))
