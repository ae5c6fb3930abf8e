"""End-to-end tests: synthetic scenes through reconstruction and statistics."""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from provider.calibration import CalibrationProvider
from utils.config_builder import write_json_document
from utils.errors import CalibrationError, KeypointFileError
from utils.pipeline import ReconstructionOptions, pair_records, reconstruct_sequence, view_skeleton
from utils.schemas import KeypointFile, SceneConfig, ViewSpec
from utils.skeleton import (
    FACIAL_JOINTS,
    JOINT_NAMES,
    LIMB_PAIRS,
    accumulate_stats,
    limb_length_errors,
    limb_lengths,
)
from utils.synthetic import generate_scene, person_rings, ring_of
from utils.view_synthesis import VirtualView


def _reconstruct(scene, **options):
    rig = scene.calibration.to_rig()
    cam_a, cam_b = rig.camera_ids
    return reconstruct_sequence(
        scene.keypoints[cam_a], scene.keypoints[cam_b], rig, ReconstructionOptions(**options),
    )


def _truth(scene):
    return {(r.frame_index, r.person_id): r.to_skeleton() for r in scene.ground_truth.records}


class TestNoiselessRoundTrip:
    def test_recovers_ground_truth(self, scene_config):
        scene = generate_scene(scene_config, seed=0)
        result = _reconstruct(scene, workers=2)
        truth = _truth(scene)
        assert len(result.skeletons) == scene_config.frames
        assert result.skipped == 0
        for skeleton in result.skeletons:
            expected = truth[(skeleton.frame_index, skeleton.person_id)]
            assert skeleton.joint_count == 18
            for index in range(18):
                np.testing.assert_allclose(skeleton.position(index), expected.position(index), atol=1e-6)

    def test_limb_lengths_match_configuration(self, scene_config):
        scene = generate_scene(scene_config, seed=0)
        body = scene_config.persons[0].body
        stats = accumulate_stats(_reconstruct(scene).skeletons)
        limbs = {limb.name: limb for limb in stats[0].limbs}
        assert limbs["r_shoulder-r_elbow"].mean == pytest.approx(body.upper_arm, abs=1e-6)
        assert limbs["r_elbow-r_wrist"].mean == pytest.approx(body.forearm, abs=1e-6)
        assert limbs["l_hip-l_knee"].mean == pytest.approx(body.thigh, abs=1e-6)
        assert limbs["l_knee-l_ankle"].mean == pytest.approx(body.shin, abs=1e-6)
        assert limbs["neck-l_shoulder"].mean == pytest.approx(body.shoulder_half_width, abs=1e-6)
        for limb in stats[0].limbs:
            assert limb.frequency == 1.0
            assert limb.std == pytest.approx(0.0, abs=1e-6)

    def test_output_order_is_frame_then_person(self):
        config = SceneConfig.model_validate({
            "persons": [{"id": "b", "start": [0.5, 0.5]}, {"id": "a", "start": [-0.5, -0.5]}],
            "frames": 3,
        })
        result = _reconstruct(generate_scene(config), workers=4)
        keys = [(s.frame_index, s.person_id) for s in result.skeletons]
        assert keys == sorted(keys)

    def test_explicit_view_records(self, scene_config):
        scene = generate_scene(scene_config.model_copy(update={"frames": 2}))
        rig = scene.calibration.to_rig()
        cam_a, cam_b = rig.camera_ids
        options = ReconstructionOptions()
        # Re-express the fisheye detections in their focused views and store the view with them
        converted = {}
        for camera_id in (cam_a, cam_b):
            camera = rig.get(camera_id)
            records = []
            for record in scene.keypoints[camera_id].records:
                view, skeleton = view_skeleton(record, camera, options)
                view_config = _view_spec(view)
                view_from_config = view_config.to_view(camera_id)
                np.testing.assert_allclose(view_from_config.rotation, view.rotation, atol=1e-9)
                joints = [None if j is None else list(j) for j in skeleton.joints]
                records.append(record.model_copy(update={"view": view_config, "joints": joints}))
            converted[camera_id] = KeypointFile(records=records)
        result = reconstruct_sequence(converted[cam_a], converted[cam_b], rig, options)
        truth = _truth(scene)
        for skeleton in result.skeletons:
            expected = truth[(skeleton.frame_index, skeleton.person_id)]
            np.testing.assert_allclose(skeleton.position(1), expected.position(1), atol=1e-5)


def _view_spec(view: VirtualView) -> ViewSpec:
    yaw, pitch, roll = Rotation.from_matrix(view.rotation).as_euler("YXZ", degrees=True)
    return ViewSpec(yaw=yaw, pitch=pitch, roll=roll, fov=90.0, width=view.size[0], height=view.size[1])


class TestScenes:
    def test_fixed_seed_is_deterministic(self, scene_config):
        noisy = scene_config.model_copy(update={"noise_sigma": 1.0})
        first, second = generate_scene(noisy, seed=42), generate_scene(noisy, seed=42)
        for camera_id, keypoints in first.keypoints.items():
            assert keypoints.model_dump_json() == second.keypoints[camera_id].model_dump_json()
        other = generate_scene(noisy, seed=43)
        assert other.keypoints["cam0"].model_dump_json() != first.keypoints["cam0"].model_dump_json()

    def test_occlusion_window_hides_joints(self, scene_config):
        config = SceneConfig.model_validate({
            **scene_config.model_dump(),
            "occlusions": [{"joints": ["r_wrist"], "start": 2, "stop": 4, "camera": "cam1"}],
        })
        scene = generate_scene(config)
        wrist = 4
        hidden = [r.frame_index for r in scene.keypoints["cam1"].records if r.joints[wrist] is None]
        assert hidden == [2, 3]
        assert all(r.joints[wrist] is not None for r in scene.keypoints["cam0"].records)
        stats = accumulate_stats(_reconstruct(scene).skeletons)
        forearm = stats[0].limbs[LIMB_PAIRS.index((3, 4))]
        assert forearm.frequency == pytest.approx(1.0 - 2 / scene_config.frames)

    def test_fully_occluded_frames_count_against_frequency(self, scene_config):
        config = SceneConfig.model_validate({
            **scene_config.model_dump(),
            "occlusions": [{"joints": list(JOINT_NAMES), "start": 0, "stop": 3, "camera": "cam1"}],
        })
        result = _reconstruct(generate_scene(config))
        assert len(result.skeletons) == 6
        assert result.skipped == 3
        assert [s.joint_count for s in result.skeletons] == [0, 0, 0, 18, 18, 18]
        stats = accumulate_stats(result.skeletons)
        assert stats[0].frames == 6
        for limb in stats[0].limbs:
            assert limb.frequency == pytest.approx(0.5)

    def test_self_occlusion_hides_face_from_behind(self):
        config = SceneConfig.model_validate({
            "persons": [{"id": "p0", "start": [0.0, -1.5], "heading": -90.0}],
            "frames": 2,
            "self_occlusion": True,
        })
        scene = generate_scene(config)
        # Both cameras sit behind the walker's face; the nose normal points away from them
        for keypoints in scene.keypoints.values():
            assert all(r.joints[0] is None for r in keypoints.records)
            assert all(r.joints[1] is not None for r in keypoints.records)

    def test_ring_classification(self):
        assert ring_of(0.1, 1.5) == "central"
        assert ring_of(0.6, 1.5) == "outer"
        assert ring_of(1.2, 1.5) == "edge"
        assert ring_of(2.0, 1.5) == "edge"

    def test_person_rings(self):
        config = SceneConfig.model_validate({
            "persons": [{"id": "near", "start": [0.0, 0.0]}, {"id": "far", "start": [0.0, 3.0]}],
            "frames": 1,
        })
        rings = person_rings(generate_scene(config))
        assert set(rings["near"].values()) == {"central"}
        assert set(rings["far"].values()) == {"edge"}


class TestAccuracyByRing:
    @pytest.mark.slow
    def test_edge_error_exceeds_central_error(self):
        config = SceneConfig.model_validate({
            "persons": [{"id": "central", "start": [0.0, 0.0]}, {"id": "edge", "start": [0.0, 3.0]}],
            "frames": 60,
            "noise_sigma": 1.0,
        })
        scene = generate_scene(config, seed=7)
        truth = _truth(scene)
        errors = {"central": [], "edge": []}
        for skeleton in _reconstruct(scene, max_residual=50.0).skeletons:
            expected = truth[(skeleton.frame_index, skeleton.person_id)]
            errors[skeleton.person_id].extend(
                e for e in limb_length_errors(skeleton, expected) if e is not None
            )
        central, edge = np.mean(errors["central"]), np.mean(errors["edge"])
        assert central <= 0.03
        assert edge > central

    def test_persons_with_different_legs(self):
        tall = {"neck_height": 1.51, "thigh": 0.47, "shin": 0.45}
        config = SceneConfig.model_validate({
            "persons": [{"id": "a", "start": [-0.4, 0.0]}, {"id": "b", "start": [0.4, 0.0], "body": tall}],
            "frames": 3,
        })
        stats = {p.person_id: p for p in accumulate_stats(_reconstruct(generate_scene(config)).skeletons)}
        knee = LIMB_PAIRS.index((8, 9))
        shin = LIMB_PAIRS.index((9, 10))
        leg_a = stats["a"].limbs[knee].mean + stats["a"].limbs[shin].mean
        leg_b = stats["b"].limbs[knee].mean + stats["b"].limbs[shin].mean
        assert leg_b - leg_a == pytest.approx(0.06, abs=1e-6)


class TestPairing:
    def test_files_from_the_same_camera(self, scene_config):
        scene = generate_scene(scene_config.model_copy(update={"frames": 1}))
        rig = scene.calibration.to_rig()
        with pytest.raises(KeypointFileError):
            pair_records(scene.keypoints["cam0"], scene.keypoints["cam0"], rig)

    def test_out_of_bounds_keypoint(self, scene_config):
        scene = generate_scene(scene_config.model_copy(update={"frames": 1}))
        record = scene.keypoints["cam0"].records[0]
        joints = list(record.joints)
        joints[0] = (5000.0, 10.0, 0.9)
        broken = KeypointFile(records=[record.model_copy(update={"joints": joints})])
        with pytest.raises(KeypointFileError):
            pair_records(broken, scene.keypoints["cam1"], scene.calibration.to_rig())

    def test_unknown_camera(self, scene_config):
        scene = generate_scene(scene_config.model_copy(update={"frames": 1}))
        record = scene.keypoints["cam0"].records[0].model_copy(update={"camera_id": "cam9"})
        with pytest.raises(CalibrationError):
            pair_records(KeypointFile(records=[record]), scene.keypoints["cam1"], scene.calibration.to_rig())

    def test_person_seen_once_is_dropped(self, scene_config):
        scene = generate_scene(scene_config.model_copy(update={"frames": 2}))
        only_first = KeypointFile(records=scene.keypoints["cam1"].records[:1])
        pairs = pair_records(scene.keypoints["cam0"], only_first, scene.calibration.to_rig())
        assert len(pairs) == 1

    def test_person_seen_once_gets_an_empty_skeleton(self, scene_config):
        scene = generate_scene(scene_config.model_copy(update={"frames": 2}))
        only_first = KeypointFile(records=scene.keypoints["cam1"].records[:1])
        result = reconstruct_sequence(
            scene.keypoints["cam0"], only_first, scene.calibration.to_rig(), ReconstructionOptions(),
        )
        assert [(s.frame_index, s.joint_count) for s in result.skeletons] == [(0, 18), (1, 0)]
        assert result.skipped == 1


_TORSO_LIMBS = [LIMB_PAIRS.index(pair) for pair in ((1, 2), (1, 5), (1, 8), (1, 11))]
_FACIAL_LIMBS = [i for i, pair in enumerate(LIMB_PAIRS) if set(pair) & FACIAL_JOINTS]
_MIRRORED_LIMBS = [
    ((1, 2), (1, 5)), ((2, 3), (5, 6)), ((3, 4), (6, 7)),
    ((1, 8), (1, 11)), ((8, 9), (11, 12)), ((9, 10), (12, 13)),
]


class TestStatisticsOnScenes:
    def test_facial_limbs_are_reconstructed_no_more_often_than_torso(self):
        config = SceneConfig.model_validate({
            "persons": [
                {"id": "p0", "start": [0.0, -1.5], "heading": -90.0},
                {"id": "p1", "start": [-1.5, 1.0], "end": [1.5, 1.0]},
            ],
            "frames": 20,
            "self_occlusion": True,
        })
        stats = accumulate_stats(_reconstruct(generate_scene(config)).skeletons)
        facial = []
        for person in stats:
            torso = min(person.limbs[i].frequency for i in _TORSO_LIMBS)
            for i in _FACIAL_LIMBS:
                assert person.limbs[i].frequency <= torso
                facial.append(person.limbs[i].frequency)
        assert min(facial) < 1.0

    @pytest.mark.slow
    def test_left_and_right_limbs_agree(self):
        config = SceneConfig.model_validate({
            "persons": [{"id": "p0", "start": [0.0, 0.0], "heading": 90.0}],
            "frames": 100,
            "noise_sigma": 1.0,
        })
        stats = accumulate_stats(_reconstruct(generate_scene(config, seed=3), max_residual=50.0).skeletons)
        limbs = stats[0].limbs
        for right, left in _MIRRORED_LIMBS:
            a, b = limbs[LIMB_PAIRS.index(right)], limbs[LIMB_PAIRS.index(left)]
            error = np.hypot(a.std / np.sqrt(a.count), b.std / np.sqrt(b.count))
            assert abs(a.mean - b.mean) <= 4.0 * error + 1e-3

    @pytest.mark.slow
    def test_noisy_central_limb_means_stay_close_to_truth(self):
        config = SceneConfig.model_validate({
            "persons": [{"id": "p0", "start": [0.0, 0.0], "heading": 90.0}],
            "frames": 100,
            "noise_sigma": 1.0,
        })
        scene = generate_scene(config, seed=11)
        truth = {limb.limb: limb.mean for limb in accumulate_stats(_truth(scene).values())[0].limbs}
        stats = accumulate_stats(_reconstruct(scene, max_residual=50.0).skeletons)
        for limb in stats[0].limbs:
            if limb.limb in _FACIAL_LIMBS:
                continue
            assert limb.frequency == 1.0
            assert limb.mean == pytest.approx(truth[limb.limb], rel=0.02)


def test_calibration_provider_round_trip(tmp_path, scene_config):
    scene = generate_scene(scene_config.model_copy(update={"frames": 1}))
    path = tmp_path / "calibration.json"
    write_json_document(path, scene.calibration)
    rig = CalibrationProvider().load(path)
    assert rig.camera_ids == ["cam0", "cam1"]
    np.testing.assert_allclose(rig.get("cam1").world_pose.translation, [0.75, 0.0, 3.0])


def test_limb_lengths_of_ground_truth_are_constant(scene_config):
    scene = generate_scene(scene_config)
    lengths = np.array([
        [np.nan if v is None else v for v in limb_lengths(r.to_skeleton())] for r in scene.ground_truth.records
    ])
    np.testing.assert_allclose(lengths.std(axis=0), 0.0, atol=1e-12)
