"""End-to-end dataset construction: scene -> random away-trajectory -> render
-> reverse -> score -> grade -> filter, persisted as a JSONL manifest with
frames as PNGs.

Stored sequences always run suboptimal -> optimal (the reversed orientation of
the sampled away-trajectory), so the first stored frame byte-equals the last
rendered away frame.
"""

from __future__ import annotations

import dataclasses
import json
import math
import shutil
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import aesthetics, scenegen, trajgen
from .aesthetics import DimensionScores, FrameObservation
from .config import PipelineConfig
from .errors import DataError
from .frame import Frame
from .geometry import CameraPose, geodesic_angle_degrees
from .trajgen import AngleBudget, Keyframe, Trajectory


class PipelineError(DataError):
    pass


class BadWeightsError(PipelineError):
    pass


class NonFiniteError(PipelineError):
    pass


class IoError(PipelineError):
    pass


@dataclass(frozen=True)
class GradeBand:
    grade: str
    raw_lo: float  # inclusive
    raw_hi: float  # exclusive
    standardized: int


# Half-open closure of the five grading bands; together they partition the
# whole real line.
GRADE_BANDS = (
    GradeBand("A", 5.0, math.inf, 95),
    GradeBand("B", 0.0, 5.0, 85),
    GradeBand("C", -5.0, 0.0, 75),
    GradeBand("D", -15.0, -5.0, 65),
    GradeBand("E", -math.inf, -15.0, 50),
)

ARTIFACT_KINDS = ("fixedness", "excessive_motion", "blur")


def aggregate_score(
    scores: DimensionScores, weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
) -> float:
    """Weighted mean of (vq, mq, ca); weights must be non-negative and sum
    to one."""
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (3,) or np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-9:
        raise BadWeightsError(f"weights must be 3 non-negatives summing to 1: {weights}")
    # fsum keeps the result invariant under (score, weight) permutations
    return math.fsum(
        [w[0] * scores.vq, w[1] * scores.mq, w[2] * scores.ca]
    )


def score_to_grade(final_raw: float) -> tuple[str, int]:
    """(grade, standardized score) for a finite raw score."""
    if not math.isfinite(final_raw):
        raise NonFiniteError(f"raw score must be finite, got {final_raw!r}")
    for band in GRADE_BANDS:
        if band.raw_lo <= final_raw < band.raw_hi:
            return band.grade, band.standardized
    raise NonFiniteError(f"no band matched {final_raw!r}")  # unreachable


@dataclass
class SequenceRecord:
    id: str
    scene_seed: int
    template: str
    frame_dir: str
    poses: str  # path to the stored trajectory JSON, relative to the manifest
    scores: DimensionScores
    final_raw: float
    grade: str
    standardized: int
    kept: bool
    artifact_flags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "scene_seed": self.scene_seed,
            "template": self.template,
            "frame_dir": self.frame_dir,
            "poses": self.poses,
            "scores": self.scores.to_dict(),
            "final_raw": self.final_raw,
            "grade": self.grade,
            "standardized": self.standardized,
            "kept": self.kept,
            "artifact_flags": sorted(self.artifact_flags),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SequenceRecord":
        return cls(
            id=d["id"],
            scene_seed=d["scene_seed"],
            template=d["template"],
            frame_dir=d["frame_dir"],
            poses=d["poses"],
            scores=DimensionScores.from_dict(d["scores"]),
            final_raw=d["final_raw"],
            grade=d["grade"],
            standardized=d["standardized"],
            kept=d["kept"],
            artifact_flags=tuple(d["artifact_flags"]),
        )


@dataclass
class Manifest:
    records: list[SequenceRecord] = field(default_factory=list)

    def __post_init__(self) -> None:
        ids = [r.id for r in self.records]
        if len(set(ids)) != len(ids):
            raise PipelineError("manifest ids must be unique")
        self.records = sorted(self.records, key=lambda r: r.id)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.to_dict()) + "\n" for r in self.records)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def read(cls, path: str | Path) -> "Manifest":
        records = []
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    records.append(SequenceRecord.from_dict(json.loads(line)))
        return cls(records)


def filter_manifest(
    manifest: Manifest, threshold: int, strict: bool = True
) -> Manifest:
    """Manifest of the records whose standardized score exceeds the threshold
    (strictly by default); kept flags are set on the survivors."""
    kept = []
    for r in manifest.records:
        passes = r.standardized > threshold if strict else r.standardized >= threshold
        if passes:
            kept.append(dataclasses.replace(r, kept=True))
    return Manifest(kept)


def flag_artifacts(
    traj: Trajectory,
    frames: list[Frame],
    budget: AngleBudget,
    static_threshold: float = 0.5,
    intensity_factor: float = 1.5,
    sharpness_floor: float = 0.1,
) -> set[str]:
    """Rule-based artifact flags: fixedness (total rotation < static
    threshold), excessive_motion (total rotation > intensity_factor x budget),
    blur (mean sharpness term below the floor). Geometric distortion cannot
    occur in these synthetic renders and is never flagged.

    Total rotation is the largest deviation from the final pose, the optimal
    endpoint of stored (suboptimal -> optimal) sequences, matching the
    reference against which the angle budget binds.
    """
    flags: set[str] = set()
    end = traj.keyframes[-1].pose.rotation
    total = max(
        geodesic_angle_degrees(k.pose.rotation, end) for k in traj.keyframes
    )
    if total < static_threshold:
        flags.add("fixedness")
    if total > intensity_factor * budget.max_rotation:
        flags.add("excessive_motion")
    if aesthetics.vq_sharpness_term(frames) < sharpness_floor:
        flags.add("blur")
    return flags


# ---------------------------------------------------------------------------
# dataset construction


def per_frame_angles(poses: list[CameraPose]) -> list[float]:
    """Geodesic rotation angle of each pose relative to the first, degrees."""
    base = poses[0].rotation
    return [geodesic_angle_degrees(p.rotation, base) for p in poses]


def collect_observations(
    scene, K, poses: list[CameraPose]
) -> list[FrameObservation]:
    out = []
    for p in poses:
        subs = tuple(scenegen.observe_subjects(scene, K, p))
        out.append(
            FrameObservation(
                subjects=subs,
                horizon_angle=scenegen.horizon_angle_degrees(scene, K, p),
            )
        )
    return out


def _alternate_return(away: Trajectory, variant: int, rng: np.random.Generator) -> Trajectory:
    """A different suboptimal-to-optimal path with the same endpoints as
    reverse(away): a direct two-keyframe route, optionally re-timed through
    interior keyframes to vary the motion profile."""
    start = away.keyframes[-1].pose  # suboptimal endpoint
    end = away.keyframes[0].pose  # optimal view
    n = len(away.keyframes)
    direct = Trajectory([Keyframe(0.0, start), Keyframe(1.0, end)])
    if n == 2 or variant % 2 == 1:
        return direct
    # re-timed: sample interior poses of the direct path at jittered times
    times = np.sort(rng.uniform(0.05, 0.95, size=n - 2))
    kfs = [Keyframe(0.0, start)]
    for i, u in enumerate(times):
        kfs.append(Keyframe((i + 1) / (n - 1), trajgen.interpolate(direct, float(u))))
    kfs.append(Keyframe(1.0, end))
    return Trajectory(kfs)


def score_sequence(
    stored_frames: list[Frame],
    stored_poses: list[CameraPose],
    observations: list[FrameObservation],
    budget: AngleBudget,
    cfg: PipelineConfig,
) -> DimensionScores:
    """Calibrated per-dimension scores for one stored sequence."""
    vq_raw = aesthetics.vq_score(stored_frames, clip_weight=cfg.vq_clip_weight)
    mq_raw = aesthetics.mq_score(
        per_frame_angles(stored_poses),
        budget=budget.max_rotation,
        static_threshold=cfg.mq_static_threshold,
        intensity_factor=cfg.mq_intensity_factor,
    )
    try:
        ca_raw = aesthetics.ca_improvement(observations, cfg.width, cfg.height)
    except aesthetics.TooShortError:
        ca_raw = 0.0  # nothing scorable anywhere in the sequence

    def cal(x: float) -> float:
        return aesthetics.calibrate(
            x, offset=cfg.calibration_offset, gain=cfg.calibration_gain
        )

    return DimensionScores(vq=cal(vq_raw), mq=cal(mq_raw), ca=cal(ca_raw))


def build_dataset(cfg: PipelineConfig, out_dir: str | Path | None = None) -> Manifest:
    """Generate, score, grade, and persist a dataset; returns the manifest.

    Every stored sequence is the reversed (suboptimal -> optimal) orientation
    of a sampled away-trajectory. Deterministic for a fixed config seed:
    running twice yields byte-identical manifests.
    """
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    K = cfg.intrinsics()
    records = []
    for i in range(cfg.count):
        scene_seed = cfg.seed * 100003 + i
        template = cfg.templates[i % len(cfg.templates)]
        scene = scenegen.make_scene(scene_seed, template, K)
        rng = np.random.default_rng([cfg.seed, i])
        budget = trajgen.resolve_budget(cfg.angle_budget, rng, cfg.max_translation)
        away = trajgen.sample_away_trajectory(
            CameraPose.identity(), budget, cfg.steps, rng
        )
        away_frames, away_poses = scenegen.render_sequence(scene, K, away, cfg.frames)

        for v in range(cfg.variants):
            rec_id = f"seq-{i:04d}-{v}"
            rec_dir = out / rec_id
            try:
                if v == 0:
                    # pose-level identity: the stored sequence IS the away
                    # render played backwards, so frame 0 byte-equals the last
                    # away frame
                    stored_traj = trajgen.reverse(away)
                    stored_frames = list(reversed(away_frames))
                    stored_poses = list(reversed(away_poses))
                else:
                    stored_traj = _alternate_return(away, v, rng)
                    stored_frames, stored_poses = scenegen.render_sequence(
                        scene, K, stored_traj, cfg.frames
                    )
                obs = collect_observations(scene, K, stored_poses)
                scores = score_sequence(stored_frames, stored_poses, obs, budget, cfg)
                final_raw = aggregate_score(scores, cfg.weights)
                grade, standardized = score_to_grade(final_raw)
                kept = (
                    standardized > cfg.threshold
                    if cfg.strict_threshold
                    else standardized >= cfg.threshold
                )
                flags = flag_artifacts(
                    stored_traj,
                    stored_frames,
                    budget,
                    static_threshold=cfg.mq_static_threshold,
                    intensity_factor=cfg.mq_intensity_factor,
                    sharpness_floor=cfg.vq_sharpness_floor,
                )
                rec_dir.mkdir(parents=True, exist_ok=True)
                for k, frame in enumerate(stored_frames):
                    frame.save_png(rec_dir / f"{k:04d}.png")
                (rec_dir / "poses.json").write_text(
                    trajgen.trajectory_to_json(stored_traj), encoding="utf-8"
                )
                (rec_dir / "scene.json").write_text(scene.to_json(), encoding="utf-8")
            except OSError as e:
                shutil.rmtree(rec_dir, ignore_errors=True)
                raise IoError(f"failed writing {rec_id}: {e}") from e
            records.append(
                SequenceRecord(
                    id=rec_id,
                    scene_seed=scene_seed,
                    template=template,
                    frame_dir=rec_id,
                    poses=f"{rec_id}/poses.json",
                    scores=scores,
                    final_raw=final_raw,
                    grade=grade,
                    standardized=standardized,
                    kept=kept,
                    artifact_flags=tuple(sorted(flags)),
                )
            )
    manifest = Manifest(records)
    manifest.write(out / "manifest.jsonl")
    return manifest


def load_frames(manifest_dir: str | Path, record: SequenceRecord) -> list[Frame]:
    rec_dir = Path(manifest_dir) / record.frame_dir
    paths = sorted(rec_dir.glob("[0-9]*.png"))
    if not paths:
        raise IoError(f"no frames under {rec_dir}")
    return [Frame.load_png(p) for p in paths]


def load_poses(manifest_dir: str | Path, record: SequenceRecord) -> Trajectory:
    return trajgen.trajectory_from_json(
        (Path(manifest_dir) / record.poses).read_text(encoding="utf-8")
    )
