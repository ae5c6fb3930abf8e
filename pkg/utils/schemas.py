"""JSON file formats: calibration, keypoints, skeletons, statistics and scenes.

Each format is a pydantic model; the published JSON schemas are generated from
these models by the ``schema`` command. Angles in files are degrees, lengths
meters, image coordinates pixels.
"""

from __future__ import annotations

from typing import Annotated

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .camera_geometry import CameraIntrinsics, CameraRig, FisheyeCamera, RigidPose, rotation_from_euler
from .constants import DEFAULT_GRAVITY, DEFAULT_VIEW_FOV, DEFAULT_VIEW_SIZE
from .lens_models import LensKind, LensModel
from .skeleton import JOINT_NAMES, LIMB_PAIRS, Skeleton2D, Skeleton3D
from .view_synthesis import VirtualView

FiniteFloat = Annotated[float, Field(allow_inf_nan=False)]
Observation = tuple[FiniteFloat, FiniteFloat, Annotated[float, Field(ge=0.0, le=1.0)]]
Position = tuple[FiniteFloat, FiniteFloat, FiniteFloat, Annotated[float, Field(ge=0.0, allow_inf_nan=False)]]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LensSpec(_Strict):
    kind: LensKind
    focal_length: Annotated[float, Field(gt=0.0, allow_inf_nan=False)]


class CameraSpec(_Strict):
    id: str = Field(min_length=1)
    lens: LensSpec
    principal_point: tuple[FiniteFloat, FiniteFloat]
    resolution: tuple[Annotated[int, Field(gt=0)], Annotated[int, Field(gt=0)]]
    world_pose: list[list[FiniteFloat]] = Field(description="4x4 camera-to-world matrix, row-major")
    gravity: tuple[FiniteFloat, FiniteFloat, FiniteFloat] = DEFAULT_GRAVITY

    @field_validator("world_pose")
    @classmethod
    def check_pose_shape(cls, value: list[list[float]]) -> list[list[float]]:
        if len(value) != 4 or any(len(row) != 4 for row in value):
            msg = "world_pose must be a 4x4 nested list"
            raise ValueError(msg)
        return value

    def to_camera(self) -> FisheyeCamera:
        intrinsics = CameraIntrinsics(
            LensModel(self.lens.kind, self.lens.focal_length), self.principal_point, self.resolution,
        )
        return FisheyeCamera(self.id, intrinsics, RigidPose.from_matrix(self.world_pose), np.array(self.gravity))

    @classmethod
    def from_camera(cls, camera: FisheyeCamera) -> CameraSpec:
        intr = camera.intrinsics
        return cls(
            id=camera.camera_id,
            lens=LensSpec(kind=intr.lens.kind, focal_length=intr.lens.focal_length),
            principal_point=intr.principal_point,
            resolution=intr.resolution,
            world_pose=camera.world_pose.matrix.tolist(),
            gravity=tuple(camera.gravity.tolist()),
        )


class CalibrationFile(_Strict):
    cameras: list[CameraSpec] = Field(min_length=1)

    def to_rig(self) -> CameraRig:
        return CameraRig(tuple(camera.to_camera() for camera in self.cameras))


class ViewSpec(_Strict):
    """Virtual view relative to its parent camera; angles in degrees."""

    yaw: FiniteFloat = 0.0
    pitch: FiniteFloat = 0.0
    roll: FiniteFloat = 0.0
    fov: Annotated[float, Field(gt=0.0, lt=180.0)] = DEFAULT_VIEW_FOV
    width: Annotated[int, Field(gt=0)] = DEFAULT_VIEW_SIZE
    height: Annotated[int, Field(gt=0)] = DEFAULT_VIEW_SIZE

    def to_view(self, parent: str) -> VirtualView:
        rotation = rotation_from_euler(self.yaw, self.pitch, self.roll)
        return VirtualView.from_fov(parent, rotation, self.fov, self.width, self.height)


def _check_joint_count(joints: list) -> list:
    if len(joints) != len(JOINT_NAMES):
        msg = f"expected {len(JOINT_NAMES)} joints, got {len(joints)}"
        raise ValueError(msg)
    return joints


class KeypointRecord(_Strict):
    """Detections of one person by one camera in one frame.

    Without ``view`` the coordinates are raw fisheye pixels of the camera;
    with it they are pixels of that virtual view.
    """

    frame_index: Annotated[int, Field(ge=0)]
    camera_id: str
    person_id: str
    joints: list[Observation | None]
    view: ViewSpec | None = None

    @field_validator("joints")
    @classmethod
    def check_joints(cls, value: list) -> list:
        return _check_joint_count(value)

    def to_skeleton(self) -> Skeleton2D:
        return Skeleton2D(self.person_id, self.frame_index, [None if j is None else tuple(j) for j in self.joints])


class KeypointFile(_Strict):
    joint_names: list[str] = Field(default_factory=lambda: list(JOINT_NAMES))
    records: list[KeypointRecord] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_joint_names(self) -> KeypointFile:
        if tuple(self.joint_names) != JOINT_NAMES:
            msg = f"joint_names must follow the COCO-18 order {list(JOINT_NAMES)}"
            raise ValueError(msg)
        return self


class SkeletonRecord(_Strict):
    frame_index: Annotated[int, Field(ge=0)]
    person_id: str
    joints: list[Position | None]

    @field_validator("joints")
    @classmethod
    def check_joints(cls, value: list) -> list:
        return _check_joint_count(value)

    def to_skeleton(self) -> Skeleton3D:
        return Skeleton3D(self.person_id, self.frame_index, [None if j is None else tuple(j) for j in self.joints])

    @classmethod
    def from_skeleton(cls, skeleton: Skeleton3D) -> SkeletonRecord:
        return cls(frame_index=skeleton.frame_index, person_id=skeleton.person_id, joints=skeleton.joints)


class SkeletonFile(_Strict):
    joint_names: list[str] = Field(default_factory=lambda: list(JOINT_NAMES))
    limbs: list[tuple[int, int]] = Field(default_factory=lambda: list(LIMB_PAIRS))
    records: list[SkeletonRecord] = Field(default_factory=list)


class LimbStatsRecord(_Strict):
    limb: int
    name: str
    count: Annotated[int, Field(ge=0)]
    frequency: Annotated[float, Field(ge=0.0, le=1.0)]
    mean: float | None
    std: float | None
    min: float | None
    q1: float | None
    median: float | None
    q3: float | None
    max: float | None


class PersonStatsRecord(_Strict):
    person_id: str
    frames: int
    limbs: list[LimbStatsRecord]


class StatsFile(_Strict):
    persons: list[PersonStatsRecord] = Field(default_factory=list)


class BodyDimensions(_Strict):
    """Segment sizes in meters of the synthetic articulated body."""

    neck_height: Annotated[float, Field(gt=0.0)] = 1.45
    shoulder_half_width: Annotated[float, Field(gt=0.0)] = 0.18
    upper_arm: Annotated[float, Field(gt=0.0)] = 0.30
    forearm: Annotated[float, Field(gt=0.0)] = 0.26
    hip_half_width: Annotated[float, Field(gt=0.0)] = 0.10
    torso: Annotated[float, Field(gt=0.0)] = 0.50
    thigh: Annotated[float, Field(gt=0.0)] = 0.44
    shin: Annotated[float, Field(gt=0.0)] = 0.42
    nose_height: Annotated[float, Field(gt=0.0)] = 0.18
    nose_forward: Annotated[float, Field(ge=0.0)] = 0.08
    eye_half_width: Annotated[float, Field(gt=0.0)] = 0.035
    eye_height: Annotated[float, Field(ge=0.0)] = 0.035
    ear_half_width: Annotated[float, Field(gt=0.0)] = 0.075

    @model_validator(mode="after")
    def check_standing(self) -> BodyDimensions:
        if self.torso + self.thigh + self.shin >= self.neck_height:
            msg = "torso + thigh + shin must be shorter than neck_height so the feet stay above the floor"
            raise ValueError(msg)
        return self


class OcclusionWindow(_Strict):
    """Joints hidden from one camera (or all when ``camera`` is null) for frames [start, stop)."""

    joints: list[str] = Field(min_length=1)
    start: Annotated[int, Field(ge=0)] = 0
    stop: Annotated[int, Field(ge=0)] | None = None
    camera: str | None = None

    @field_validator("joints")
    @classmethod
    def check_names(cls, value: list[str]) -> list[str]:
        unknown = sorted(set(value) - set(JOINT_NAMES))
        if unknown:
            msg = f"unknown joint names {unknown}"
            raise ValueError(msg)
        return value


class PersonSpec(_Strict):
    id: str
    start: tuple[FiniteFloat, FiniteFloat] = (0.0, 0.0)
    end: tuple[FiniteFloat, FiniteFloat] | None = None
    heading: FiniteFloat | None = Field(default=None, description="degrees; defaults to the walking direction")
    swing: Annotated[float, Field(ge=0.0, le=80.0)] = 20.0
    cycles: Annotated[float, Field(ge=0.0)] = 2.0
    body: BodyDimensions = Field(default_factory=BodyDimensions)


class RigSpec(_Strict):
    """Two ceiling cameras looking straight down, separated along world x."""

    height: Annotated[float, Field(gt=0.0)] = 3.0
    baseline: Annotated[float, Field(gt=0.0)] = 1.5
    lens: LensKind = LensKind.EQUIDISTANT
    focal_length: Annotated[float, Field(gt=0.0)] = 619.0
    resolution: tuple[Annotated[int, Field(gt=0)], Annotated[int, Field(gt=0)]] = (2592, 1944)
    camera_ids: tuple[str, str] = ("cam0", "cam1")

    @model_validator(mode="after")
    def check_ids(self) -> RigSpec:
        if self.camera_ids[0] == self.camera_ids[1]:
            msg = "camera_ids must differ"
            raise ValueError(msg)
        return self


class SceneConfig(_Strict):
    rig: RigSpec = Field(default_factory=RigSpec)
    persons: list[PersonSpec] = Field(default_factory=lambda: [PersonSpec(id="person0")], min_length=1)
    frames: Annotated[int, Field(gt=0)] = 100
    noise_sigma: Annotated[float, Field(ge=0.0)] = 0.0
    confidence: Annotated[float, Field(ge=0.0, le=1.0)] = 0.9
    occlusions: list[OcclusionWindow] = Field(default_factory=list)
    self_occlusion: bool = False

    @model_validator(mode="after")
    def check_persons(self) -> SceneConfig:
        ids = [p.id for p in self.persons]
        if len(set(ids)) != len(ids):
            msg = f"duplicate person ids {ids}"
            raise ValueError(msg)
        return self

