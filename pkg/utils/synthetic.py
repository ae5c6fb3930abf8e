"""Synthetic ground-truthed scenes: a ceiling-mounted fisheye rig watching walkers.

Bodies are posed by forward kinematics from fixed segment sizes, so every limb
keeps a constant length over the trajectory. Keypoints are obtained by
projecting the joints through each fisheye camera, adding Gaussian pixel noise
and dropping joints that are occluded or fall off the sensor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .camera_geometry import CameraIntrinsics, CameraRig, FisheyeCamera, RigidPose, project_many
from .constants import RING_NAMES
from .lens_models import LensModel, field_of_view
from .logger import get_logger
from .schemas import (
    BodyDimensions,
    CalibrationFile,
    CameraSpec,
    KeypointFile,
    KeypointRecord,
    PersonSpec,
    RigSpec,
    SceneConfig,
    SkeletonFile,
    SkeletonRecord,
)
from .skeleton import JOINT_NAMES

logger = get_logger(__name__)

_UP = np.array([0.0, 0.0, 1.0])
# Cameras look straight down: camera x = world x, camera y = world -y, optical axis = world -z
_DOWNWARD = np.diag([1.0, -1.0, -1.0])
_JOINT_INDEX = {name: index for index, name in enumerate(JOINT_NAMES)}


def build_rig(rig_config: RigSpec) -> CameraRig:
    """Two downward-looking cameras at ``height``, ``baseline`` apart along world x."""
    width, height = rig_config.resolution
    intrinsics = CameraIntrinsics(LensModel(rig_config.lens, rig_config.focal_length), (width / 2.0, height / 2.0), (width, height))
    half = rig_config.baseline / 2.0
    cameras = tuple(
        FisheyeCamera(camera_id, intrinsics, RigidPose(_DOWNWARD, np.array([x, 0.0, rig_config.height])))
        for camera_id, x in zip(rig_config.camera_ids, (-half, half), strict=True)
    )
    return CameraRig(cameras)


def _direction(angle: float, forward: NDArray[np.float64]) -> NDArray[np.float64]:
    """Unit vector hanging down, swung by ``angle`` towards ``forward``."""
    return -math.cos(angle) * _UP + math.sin(angle) * forward


def pose_body(
    body: BodyDimensions, position: tuple[float, float], heading: float, phase: float, swing: float,
) -> NDArray[np.float64]:
    """World positions (18, 3) of the COCO-18 joints for one gait phase.

    Args:
        body: Segment sizes in meters.
        position: Floor position (x, y) below the neck.
        heading: Facing direction, radians from world +x.
        phase: Gait phase, radians.
        swing: Peak arm and leg swing, radians.

    """
    forward = np.array([math.cos(heading), math.sin(heading), 0.0])
    right = np.array([math.sin(heading), -math.cos(heading), 0.0])
    joints = np.zeros((len(JOINT_NAMES), 3))

    neck = np.array([position[0], position[1], body.neck_height])
    arm = swing * math.sin(phase)
    bend = 0.5 * swing * (1.0 + math.sin(phase))

    def put(name: str, point: NDArray[np.float64]) -> NDArray[np.float64]:
        joints[_JOINT_INDEX[name]] = point
        return point

    put("neck", neck)
    for side, sign, arm_angle in (("r", 1.0, arm), ("l", -1.0, -arm)):
        shoulder = put(f"{side}_shoulder", neck + sign * body.shoulder_half_width * right)
        elbow = put(f"{side}_elbow", shoulder + body.upper_arm * _direction(arm_angle, forward))
        put(f"{side}_wrist", elbow + body.forearm * _direction(arm_angle + bend, forward))
        hip = put(f"{side}_hip", neck + sign * body.hip_half_width * right - body.torso * _UP)
        # Legs swing against the arm on the same side
        knee = put(f"{side}_knee", hip + body.thigh * _direction(-arm_angle, forward))
        put(f"{side}_ankle", knee + body.shin * _direction(-arm_angle - 0.5 * bend, forward))

    nose = put("nose", neck + body.nose_height * _UP + body.nose_forward * forward)
    for side, sign in (("r", 1.0), ("l", -1.0)):
        eye = put(f"{side}_eye", nose + sign * body.eye_half_width * right + body.eye_height * _UP - 0.01 * forward)
        put(f"{side}_ear", eye + sign * (body.ear_half_width - body.eye_half_width) * right - 0.07 * forward)
    return joints


def person_frames(person: PersonSpec, frames: int) -> list[tuple[NDArray[np.float64], NDArray[np.float64]]]:
    """Joint positions and facing direction per frame for a straight-line walk."""
    start = np.array(person.start, dtype=np.float64)
    end = start if person.end is None else np.array(person.end, dtype=np.float64)
    travel = end - start
    if person.heading is not None:
        heading = math.radians(person.heading)
    elif np.linalg.norm(travel) > 0.0:
        heading = math.atan2(travel[1], travel[0])
    else:
        heading = 0.0
    forward = np.array([math.cos(heading), math.sin(heading), 0.0])
    swing = math.radians(person.swing)
    out = []
    for k in range(frames):
        t = k / (frames - 1) if frames > 1 else 0.0
        position = start + t * travel
        phase = 2.0 * math.pi * person.cycles * t
        out.append((pose_body(person.body, (position[0], position[1]), heading, phase, swing), forward))
    return out


def _facial_normals(forward: NDArray[np.float64]) -> dict[int, NDArray[np.float64]]:
    right = np.array([forward[1], -forward[0], 0.0])
    return {
        _JOINT_INDEX["nose"]: forward,
        _JOINT_INDEX["r_eye"]: forward,
        _JOINT_INDEX["l_eye"]: forward,
        _JOINT_INDEX["r_ear"]: right,
        _JOINT_INDEX["l_ear"]: -right,
    }


def _occluded(config: SceneConfig, frame: int, camera_id: str) -> set[int]:
    hidden: set[int] = set()
    for window in config.occlusions:
        if window.camera is not None and window.camera != camera_id:
            continue
        if frame < window.start or (window.stop is not None and frame >= window.stop):
            continue
        hidden.update(_JOINT_INDEX[name] for name in window.joints)
    return hidden


@dataclass
class SyntheticScene:
    """Everything the synth command writes: calibration, keypoints per camera, ground truth."""

    calibration: CalibrationFile
    keypoints: dict[str, KeypointFile]
    ground_truth: SkeletonFile
    config: SceneConfig


def generate_scene(config: SceneConfig, seed: int = 0) -> SyntheticScene:
    """Render the scene's trajectories into both cameras; deterministic for a seed."""
    rng = np.random.default_rng(seed)
    rig = build_rig(config.rig)
    keypoints = {camera.camera_id: KeypointFile() for camera in rig.cameras}
    truth = SkeletonFile()
    trajectories = {person.id: person_frames(person, config.frames) for person in config.persons}

    for frame in range(config.frames):
        for person in config.persons:
            joints, forward = trajectories[person.id][frame]
            truth.records.append(SkeletonRecord(
                frame_index=frame,
                person_id=person.id,
                joints=[(float(x), float(y), float(z), 0.0) for x, y, z in joints],
            ))
            normals = _facial_normals(forward)
            for camera in rig.cameras:
                in_camera = camera.world_pose.inverse().apply(joints)
                pixels, valid = project_many(in_camera, camera.intrinsics)
                noise = rng.normal(0.0, config.noise_sigma, size=pixels.shape) if config.noise_sigma > 0 else 0.0
                pixels = pixels + noise
                valid &= camera.intrinsics.contains(pixels)
                hidden = _occluded(config, frame, camera.camera_id)
                if config.self_occlusion:
                    center = camera.world_pose.translation
                    hidden.update(
                        index for index, normal in normals.items()
                        if float(np.dot(normal, center - joints[index])) <= 0.0
                    )
                observations = [
                    None if not valid[i] or i in hidden
                    else (float(pixels[i, 0]), float(pixels[i, 1]), config.confidence)
                    for i in range(len(JOINT_NAMES))
                ]
                keypoints[camera.camera_id].records.append(KeypointRecord(
                    frame_index=frame, camera_id=camera.camera_id, person_id=person.id, joints=observations,
                ))

    calibration = CalibrationFile(cameras=[CameraSpec.from_camera(camera) for camera in rig.cameras])
    logger.info(
        "Generated synthetic scene (frames: %d, persons: %d, cameras: %s, sigma: %.3f px, seed: %d)",
        config.frames, len(config.persons), rig.camera_ids, config.noise_sigma, seed,
    )
    return SyntheticScene(calibration, keypoints, truth, config)


def ring_of(theta: float, half_fov: float) -> str:
    """Ring name for an inclination: thirds of the lens half field of view."""
    fraction = min(max(theta / half_fov, 0.0), 1.0 - 1e-12)
    return RING_NAMES[int(fraction * len(RING_NAMES))]


def inclination(camera: FisheyeCamera, point: NDArray[np.float64]) -> float:
    """Angle between the camera's optical axis and the ray to a world point."""
    local = camera.world_pose.inverse().apply(point)
    return math.atan2(math.hypot(local[0], local[1]), local[2])


def person_rings(scene: SyntheticScene) -> dict[str, dict[str, str]]:
    """Ring of each person's mean neck position per camera (first frame)."""
    rig = scene.calibration.to_rig()
    neck = _JOINT_INDEX["neck"]
    rings: dict[str, dict[str, str]] = {}
    for record in scene.ground_truth.records:
        if record.frame_index != 0:
            continue
        point = np.array(record.joints[neck][:3])
        rings[record.person_id] = {}
        for camera in rig.cameras:
            intr = camera.intrinsics
            half_fov = field_of_view(intr.lens, min(intr.width, intr.height) / 2.0) / 2.0
            rings[record.person_id][camera.camera_id] = ring_of(inclination(camera, point), half_fov)
    return rings
