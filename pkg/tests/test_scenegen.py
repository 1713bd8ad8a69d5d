import numpy as np
import pytest

from percomp import geometry as g
from percomp import scenegen as sg
from percomp import trajgen as tg
from percomp.frame import Frame

K = sg.DEFAULT_INTRINSICS
IDENT = g.CameraPose.identity()


class TestMakeScene:
    def test_deterministic(self):
        assert (
            sg.make_scene(1, "single_subject").to_json()
            == sg.make_scene(1, "single_subject").to_json()
        )

    @pytest.mark.parametrize("seed", range(8))
    def test_single_subject_count(self, seed):
        assert len(sg.make_scene(seed, "single_subject").subjects()) == 1

    @pytest.mark.parametrize("seed", range(8))
    def test_multi_subject_count(self, seed):
        assert 2 <= len(sg.make_scene(seed, "multi_subject").subjects()) <= 5

    @pytest.mark.parametrize("seed", range(8))
    def test_landscape_has_horizon(self, seed):
        assert sg.make_scene(seed, "landscape").horizon is not None

    def test_unknown_template(self):
        with pytest.raises(sg.UnknownTemplateError):
            sg.make_scene(0, "portrait")

    def test_json_round_trip(self):
        scene = sg.make_scene(4, "multi_subject")
        assert sg.Scene.from_json(scene.to_json()).to_json() == scene.to_json()


class TestRender:
    def test_byte_equal_repeat(self):
        scene = sg.make_scene(2, "multi_subject")
        assert sg.render(scene, K, IDENT) == sg.render(scene, K, IDENT)

    def test_centered_subject_centroid(self):
        # oracle: geometry projection of the element center
        scene = sg.Scene(
            elements=[
                sg.SceneElement("sphere", (0.0, 0.0, 6.0), 0.8, (200, 40, 40), "subject")
            ]
        )
        frame = sg.render(scene, K, IDENT)
        mask = np.any(frame.pixels != 128, axis=2)
        ys, xs = np.nonzero(mask)
        cx = (xs.min() + xs.max()) / 2.0
        cy = (ys.min() + ys.max()) / 2.0
        expected = g.project(K, IDENT, np.array([0.0, 0.0, 6.0]))
        assert abs(cx - expected[0]) <= 1.0
        assert abs(cy - expected[1]) <= 1.0

    def test_occlusion(self):
        near = sg.SceneElement("sphere", (0.0, 0.0, 4.0), 0.5, (10, 200, 10), "subject")
        far = sg.SceneElement("sphere", (0.0, 0.0, 8.0), 1.0, (200, 10, 10), "background")
        frame = sg.render(sg.Scene(elements=[far, near]), K, IDENT)
        assert tuple(frame.pixels[K.height // 2, K.width // 2]) == (10, 200, 10)

    def test_horizon_split(self):
        scene = sg.Scene(elements=[], horizon=(0.0, -1.0, 0.0))
        frame = sg.render(scene, K, IDENT)
        assert tuple(frame.pixels[10, 128]) == sg.SKY_COLOR
        assert tuple(frame.pixels[245, 128]) == sg.GROUND_COLOR


class TestObservations:
    def test_metadata_matches_segmentation(self):
        # uncluttered scene: the color-mask centroid should sit within 2 px of
        # the metadata centroid
        scene = sg.Scene(
            elements=[
                sg.SceneElement("sphere", (0.4, -0.3, 6.0), 0.7, (200, 40, 40), "subject")
            ]
        )
        frame = sg.render(scene, K, IDENT)
        obs = sg.observe_subjects(scene, K, IDENT)[0]
        mask = np.all(frame.pixels == np.array([200, 40, 40]), axis=2)
        ys, xs = np.nonzero(mask)
        assert abs(xs.mean() - obs.centroid[0]) <= 2.0
        assert abs(ys.mean() - obs.centroid[1]) <= 2.0

    def test_offscreen_subject_skipped(self):
        scene = sg.Scene(
            elements=[
                sg.SceneElement("sphere", (100.0, 0.0, 6.0), 0.7, (1, 2, 3), "subject")
            ]
        )
        assert sg.observe_subjects(scene, K, IDENT) == []

    def test_horizon_angle_level_and_rolled(self):
        scene = sg.make_scene(0, "landscape")
        assert sg.horizon_angle_degrees(scene, K, IDENT) == 0.0
        rolled = g.CameraPose(g.rotation_pan_tilt_roll(roll=7.0))
        assert abs(sg.horizon_angle_degrees(scene, K, rolled) - 7.0) < 1e-9


class TestRenderSequence:
    def test_constant_trajectory_frames_equal(self):
        scene = sg.make_scene(3, "single_subject")
        traj = tg.Trajectory([tg.Keyframe(0.0, IDENT), tg.Keyframe(1.0, IDENT)])
        frames, _ = sg.render_sequence(scene, K, traj, 5)
        assert all(f == frames[0] for f in frames)

    def test_reverse_renders_reversed_frames(self):
        scene = sg.make_scene(5, "multi_subject")
        traj = tg.sample_away_trajectory(
            IDENT, tg.AngleBudget(15.0), 4, np.random.default_rng(6)
        )
        fwd, _ = sg.render_sequence(scene, K, traj, 6)
        rev, _ = sg.render_sequence(scene, K, tg.reverse(traj), 6)
        assert all(a == b for a, b in zip(rev, reversed(fwd)))

    def test_two_frames_are_endpoints(self):
        scene = sg.make_scene(5, "single_subject")
        traj = tg.sample_away_trajectory(
            IDENT, tg.AngleBudget(12.0), 3, np.random.default_rng(1)
        )
        frames, poses = sg.render_sequence(scene, K, traj, 2)
        assert poses[0] == traj.keyframes[0].pose
        assert poses[1] == traj.keyframes[-1].pose
        assert frames[0] == sg.render(scene, K, traj.keyframes[0].pose)

    def test_needs_two_frames(self):
        scene = sg.make_scene(0, "single_subject")
        traj = tg.Trajectory([tg.Keyframe(0.0, IDENT), tg.Keyframe(1.0, IDENT)])
        with pytest.raises(sg.SceneError):
            sg.render_sequence(scene, K, traj, 1)


class TestPlanarViews:
    def _random_image(self, seed=0):
        rng = np.random.default_rng(seed)
        return Frame(rng.integers(0, 256, size=(K.height, K.width, 3)).astype(np.uint8))

    def test_identity_frame_byte_equal(self):
        img = self._random_image()
        traj = tg.sample_away_trajectory(
            IDENT, tg.AngleBudget(10.0), 4, np.random.default_rng(2)
        )
        views = sg.planar_views(img, K, traj, 5)
        assert views[0] == img

    def test_rotation_recovered_per_frame(self):
        img = self._random_image(1)
        traj = tg.sample_away_trajectory(
            IDENT, tg.AngleBudget(14.0), 4, np.random.default_rng(3)
        )
        n = 5
        sg.planar_views(img, K, traj, n)  # warps must not raise
        for k in range(n):
            pose = tg.interpolate(traj, k / (n - 1))
            H = g.homography_pure_rotation(K, pose.rotation)
            got = g.rotation_angle_from_homography(K, H)
            want = g.geodesic_angle_degrees(pose.rotation, np.eye(3))
            assert abs(got - want) < 1e-6

    def test_translation_rejected(self):
        img = self._random_image(2)
        shifted = g.CameraPose(np.eye(3), np.array([0.1, 0.0, 0.0]))
        traj = tg.Trajectory([tg.Keyframe(0.0, IDENT), tg.Keyframe(1.0, shifted)])
        with pytest.raises(sg.NonRotationalTrajectoryError):
            sg.planar_views(img, K, traj, 3)
