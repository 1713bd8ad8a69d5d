import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from percomp import geometry as g
from percomp import metrics as m
from percomp import trajgen as tg
from percomp.frame import Frame
from percomp.metrics import MotionLabel

K = g.CameraIntrinsics(fx=256.0, fy=256.0, cx=128.0, cy=128.0, width=256, height=256)
IDENT = g.CameraPose.identity()


def noisy(frame: Frame, amplitude: float, seed: int) -> Frame:
    rng = np.random.default_rng(seed)
    px = frame.pixels.astype(np.float64) + rng.normal(0, amplitude, frame.pixels.shape)
    return Frame(np.clip(np.rint(px), 0, 255).astype(np.uint8))


class TestPsnr:
    def test_identical_capped_with_flag(self):
        a = Frame(np.full((16, 16, 3), 77, np.uint8))
        result = m.psnr(a, a.copy())
        assert result == (100.0, True)

    def test_opposite_extremes(self):
        a = Frame(np.zeros((16, 16, 3), np.uint8))
        b = Frame(np.full((16, 16, 3), 255, np.uint8))
        assert m.psnr(a, b).db == 0.0

    def test_plus_one_closed_form(self):
        rng = np.random.default_rng(0)
        a = Frame(rng.integers(0, 255, size=(32, 32, 3)).astype(np.uint8))
        b = Frame((a.pixels + 1).astype(np.uint8))
        assert abs(m.psnr(a, b).db - 20.0 * math.log10(255.0)) < 1e-3

    def test_noise_monotonic(self):
        base = Frame(np.full((64, 64, 3), 128, np.uint8))
        values = [m.psnr(base, noisy(base, amp, 1)).db for amp in (2.0, 8.0, 24.0)]
        assert values[0] > values[1] > values[2]

    def test_dim_mismatch(self):
        with pytest.raises(m.DimMismatchError):
            m.psnr(Frame(np.zeros((8, 8, 3), np.uint8)),
                   Frame(np.zeros((8, 9, 3), np.uint8)))

    @given(seed=st.integers(0, 1000))
    @settings(max_examples=25, deadline=None)
    def test_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        a = Frame(rng.integers(0, 256, size=(16, 16, 3)).astype(np.uint8))
        b = Frame(rng.integers(0, 256, size=(16, 16, 3)).astype(np.uint8))
        assert m.psnr(a, b) == m.psnr(b, a)


class TestSsim:
    def test_identical_is_one(self):
        rng = np.random.default_rng(2)
        a = Frame(rng.integers(0, 256, size=(32, 32, 3)).astype(np.uint8))
        assert m.ssim(a, a.copy()) == 1.0

    def test_constant_closed_form(self):
        a = Frame(np.full((16, 16, 3), 100, np.uint8))
        b = Frame(np.full((16, 16, 3), 110, np.uint8))
        c1 = (0.01 * 255) ** 2
        expected = (2 * 100 * 110 + c1) / (100**2 + 110**2 + c1)
        assert abs(m.ssim(a, b) - expected) < 1e-6

    def test_noise_decorrelates(self):
        rng = np.random.default_rng(3)
        a = Frame(rng.integers(0, 256, size=(256, 256, 3)).astype(np.uint8))
        b = Frame(rng.integers(0, 256, size=(256, 256, 3)).astype(np.uint8))
        assert m.ssim(a, b) < 0.2

    def test_symmetry(self):
        rng = np.random.default_rng(4)
        a = Frame(rng.integers(0, 256, size=(24, 24, 3)).astype(np.uint8))
        b = Frame(rng.integers(0, 256, size=(24, 24, 3)).astype(np.uint8))
        assert m.ssim(a, b) == m.ssim(b, a)

    def test_too_small(self):
        with pytest.raises(m.TooSmallError):
            m.ssim(Frame(np.zeros((4, 4, 3), np.uint8)),
                   Frame(np.zeros((4, 4, 3), np.uint8)))


class TestClassifyMotionPoses:
    def test_static(self):
        assert m.classify_motion_poses([IDENT, IDENT]) == [MotionLabel.STATIC]

    def test_pan_right_convention(self):
        seq = [IDENT, g.CameraPose(g.rotation_pan_tilt_roll(pan=2.0))]
        assert m.classify_motion_poses(seq) == [MotionLabel.PAN_RIGHT]

    @pytest.mark.parametrize(
        "kwargs,label",
        [
            (dict(pan=-2.0), MotionLabel.PAN_LEFT),
            (dict(tilt=2.0), MotionLabel.TILT_UP),
            (dict(tilt=-2.0), MotionLabel.TILT_DOWN),
            (dict(roll=2.0), MotionLabel.ROLL_CW),
            (dict(roll=-2.0), MotionLabel.ROLL_CCW),
        ],
    )
    def test_axis_conventions(self, kwargs, label):
        seq = [IDENT, g.CameraPose(g.rotation_pan_tilt_roll(**kwargs))]
        assert m.classify_motion_poses(seq) == [label]

    def test_reversal_flips_labels(self):
        rng = np.random.default_rng(5)
        traj = tg.sample_away_trajectory(IDENT, tg.AngleBudget(20.0), 6, rng)
        poses = [k.pose for k in traj.keyframes]
        fwd = m.classify_motion_poses(poses)
        rev = m.classify_motion_poses(list(reversed(poses)))
        assert rev == [m.REVERSED_LABEL[lab] for lab in reversed(fwd)]

    def test_needs_two(self):
        with pytest.raises(m.MetricError):
            m.classify_motion_poses([IDENT])


class TestClassifyMotionFrames:
    def test_agrees_with_pose_path(self):
        rng = np.random.default_rng(6)
        traj = tg.sample_away_trajectory(IDENT, tg.AngleBudget(18.0), 11, rng)
        poses = [k.pose for k in traj.keyframes]
        pose_labels = m.classify_motion_poses(poses)
        pairs = [
            m.grid_correspondences(K, a, b) for a, b in zip(poses, poses[1:])
        ]
        frame_labels = m.classify_motion_correspondences(pairs, K)
        assert frame_labels == pose_labels

    def test_zoom_labels(self):
        src = np.array(
            [[60.0, 60.0], [200.0, 60.0], [200.0, 200.0], [60.0, 200.0],
             [128.0, 100.0], [90.0, 150.0]]
        )
        for scale, label in ((1.2, MotionLabel.ZOOM_IN), (0.8, MotionLabel.ZOOM_OUT)):
            H = np.diag([scale, scale, 1.0])
            dst = g._apply_h_points(H, src)
            got = m.classify_motion_correspondences([list(zip(src, dst))], K)
            assert got == [label]

    def test_static_from_identity_correspondences(self):
        src = np.array([[10.0, 10.0], [200.0, 30.0], [40.0, 220.0], [180.0, 190.0]])
        got = m.classify_motion_correspondences([list(zip(src, src))], K)
        assert got == [MotionLabel.STATIC]


class TestCmm:
    def test_identical(self):
        labels = [MotionLabel.PAN_LEFT, MotionLabel.STATIC, MotionLabel.ZOOM_IN]
        assert m.cmm(labels, list(labels)) == 1.0

    def test_opposite(self):
        a = [MotionLabel.PAN_LEFT] * 4
        b = [MotionLabel.PAN_RIGHT] * 4
        assert m.cmm(a, b) == 0.0

    def test_half(self):
        a = [MotionLabel.PAN_LEFT, MotionLabel.TILT_UP, MotionLabel.STATIC,
             MotionLabel.ROLL_CW]
        b = [MotionLabel.PAN_LEFT, MotionLabel.TILT_DOWN, MotionLabel.STATIC,
             MotionLabel.ROLL_CCW]
        assert m.cmm(a, b) == 0.5

    def test_length_mismatch(self):
        with pytest.raises(m.LengthMismatchError):
            m.cmm([MotionLabel.STATIC], [])


class TestReport:
    def test_compare_sequences(self):
        rng = np.random.default_rng(7)
        frames = [
            Frame(rng.integers(0, 256, size=(32, 32, 3)).astype(np.uint8))
            for _ in range(3)
        ]
        poses = [
            IDENT,
            g.CameraPose(g.rotation_pan_tilt_roll(pan=2.0)),
            g.CameraPose(g.rotation_pan_tilt_roll(pan=4.0)),
        ]
        report = m.compare_sequences(frames, [f.copy() for f in frames], poses, poses)
        assert report.psnr == 100.0
        assert report.psnr_exact
        assert report.ssim == 1.0
        assert report.cmm == 1.0
        assert '"cmm": 1.0' in report.to_json()
