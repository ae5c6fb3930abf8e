"""Projection of camera-frame object points to distorted image points and back.

Camera frame convention: x right, y down, z along the optical axis. Image
points are pixel coordinates with pixel centres on integers. Rotations attached
to a camera map its own frame into its parent frame (camera-to-parent).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial.transform import Rotation

from .constants import DEFAULT_GRAVITY, ROTATION_TOLERANCE
from .errors import CalibrationError, DegenerateInput, DomainError, SingularPose
from .lens_models import LensKind, LensModel

ImagePoint = NDArray[np.float64]
ObjectPoint = NDArray[np.float64]


def _as_rotation(matrix: ArrayLike, name: str = "rotation") -> NDArray[np.float64]:
    rotation = np.array(matrix, dtype=np.float64)
    if rotation.shape != (3, 3) or not np.all(np.isfinite(rotation)):
        msg = f"{name} must be a finite 3x3 matrix"
        raise SingularPose(msg)
    if not np.allclose(rotation.T @ rotation, np.eye(3), atol=ROTATION_TOLERANCE, rtol=0.0):
        msg = f"{name} is not orthonormal within {ROTATION_TOLERANCE}"
        raise SingularPose(msg)
    if abs(np.linalg.det(rotation) - 1.0) > ROTATION_TOLERANCE:
        msg = f"{name} is not a proper rotation (det != +1)"
        raise SingularPose(msg)
    rotation.setflags(write=False)
    return rotation


def rotation_from_euler(yaw: float = 0.0, pitch: float = 0.0, roll: float = 0.0) -> NDArray[np.float64]:
    """Camera-to-parent rotation from pan/tilt/roll angles in degrees.

    Yaw turns about the camera y axis, pitch about x, roll about the optical axis,
    composed as R = R_y(yaw) @ R_x(pitch) @ R_z(roll).
    """
    return Rotation.from_euler("YXZ", [yaw, pitch, roll], degrees=True).as_matrix()


@dataclass(frozen=True)
class CameraIntrinsics:
    """Lens model, principal point (c_x, c_y) and sensor resolution (width, height)."""

    lens: LensModel
    principal_point: tuple[float, float]
    resolution: tuple[int, int]

    def __post_init__(self) -> None:
        cx, cy = (float(v) for v in self.principal_point)
        width, height = (int(v) for v in self.resolution)
        object.__setattr__(self, "principal_point", (cx, cy))
        object.__setattr__(self, "resolution", (width, height))
        if width <= 0 or height <= 0:
            msg = f"resolution must be positive, got {width}x{height}"
            raise CalibrationError(msg)
        if not (0.0 <= cx <= width and 0.0 <= cy <= height):
            msg = f"principal point ({cx}, {cy}) lies outside the {width}x{height} sensor"
            raise CalibrationError(msg)

    @classmethod
    def rectilinear(cls, fov_deg: float, width: int, height: int | None = None) -> CameraIntrinsics:
        """Pinhole intrinsics whose horizontal field of view is ``fov_deg``."""
        height = width if height is None else height
        if not 0.0 < fov_deg < 180.0:
            msg = f"rectilinear field of view must lie in (0, 180) degrees, got {fov_deg}"
            raise DomainError(msg)
        focal = (width / 2.0) / math.tan(math.radians(fov_deg) / 2.0)
        return cls(LensModel(LensKind.RECTILINEAR, focal), (width / 2.0, height / 2.0), (width, height))

    @property
    def center(self) -> NDArray[np.float64]:
        return np.array(self.principal_point, dtype=np.float64)

    @property
    def width(self) -> int:
        return self.resolution[0]

    @property
    def height(self) -> int:
        return self.resolution[1]

    @property
    def matrix(self) -> NDArray[np.float64]:
        """K with the focal length on the diagonal and c in the third column."""
        f = self.lens.focal_length
        cx, cy = self.principal_point
        return np.array([[f, 0.0, cx], [0.0, f, cy], [0.0, 0.0, 1.0]])

    def contains(self, points: ArrayLike, tolerance: float = 0.0) -> NDArray[np.bool_]:
        """Mask of points whose bilinear neighbourhood lies on the sensor."""
        pts = np.asarray(points, dtype=np.float64)
        x, y = pts[..., 0], pts[..., 1]
        return (
            np.isfinite(x) & np.isfinite(y)
            & (x >= -tolerance) & (x <= self.width - 1 + tolerance)
            & (y >= -tolerance) & (y <= self.height - 1 + tolerance)
        )

    def clip(self, points: ArrayLike) -> NDArray[np.float64]:
        pts = np.asarray(points, dtype=np.float64)
        return np.stack(
            (np.clip(pts[..., 0], 0.0, self.width - 1), np.clip(pts[..., 1], 0.0, self.height - 1)), axis=-1,
        )


@dataclass(frozen=True, eq=False)
class RigidPose:
    """Rotation and translation (meters) of a camera frame in world space."""

    rotation: NDArray[np.float64]
    translation: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        object.__setattr__(self, "rotation", _as_rotation(self.rotation, "pose rotation"))
        translation = np.array(self.translation, dtype=np.float64).reshape(-1)
        if translation.shape != (3,) or not np.all(np.isfinite(translation)):
            msg = "pose translation must be a finite 3-vector"
            raise SingularPose(msg)
        translation.setflags(write=False)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls) -> RigidPose:
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix: ArrayLike) -> RigidPose:
        """Build from a 4x4 homogeneous matrix with last row (0, 0, 0, 1)."""
        values = np.asarray(matrix, dtype=np.float64)
        if values.shape != (4, 4):
            msg = f"world pose must be 4x4, got shape {values.shape}"
            raise SingularPose(msg)
        if not np.allclose(values[3], [0.0, 0.0, 0.0, 1.0], atol=ROTATION_TOLERANCE, rtol=0.0):
            msg = "world pose last row must be (0, 0, 0, 1)"
            raise SingularPose(msg)
        return cls(values[:3, :3], values[:3, 3])

    @property
    def matrix(self) -> NDArray[np.float64]:
        out = np.eye(4)
        out[:3, :3] = self.rotation
        out[:3, 3] = self.translation
        return out

    def inverse(self) -> RigidPose:
        return RigidPose(self.rotation.T, -self.rotation.T @ self.translation)

    def compose(self, other: RigidPose) -> RigidPose:
        """Pose equivalent to applying ``other`` first, then ``self``."""
        return RigidPose(self.rotation @ other.rotation, self.rotation @ other.translation + self.translation)

    def apply(self, points: ArrayLike) -> NDArray[np.float64]:
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation.T + self.translation


@dataclass(frozen=True, eq=False)
class FisheyeCamera:
    """A calibrated physical camera: intrinsics, world pose W and world gravity."""

    camera_id: str
    intrinsics: CameraIntrinsics
    world_pose: RigidPose
    gravity: NDArray[np.float64] = field(default_factory=lambda: np.array(DEFAULT_GRAVITY))

    def __post_init__(self) -> None:
        gravity = np.array(self.gravity, dtype=np.float64).reshape(-1)
        norm = float(np.linalg.norm(gravity)) if gravity.shape == (3,) else 0.0
        if not math.isfinite(norm) or norm == 0.0:
            msg = f"camera {self.camera_id}: gravity must be a non-zero 3-vector"
            raise CalibrationError(msg)
        gravity = gravity / norm
        gravity.setflags(write=False)
        object.__setattr__(self, "gravity", gravity)

    @property
    def gravity_in_camera(self) -> NDArray[np.float64]:
        """Gravity direction expressed in this camera's frame."""
        return self.world_pose.rotation.T @ self.gravity


@dataclass(frozen=True)
class CameraRig:
    """Ordered collection of calibrated cameras sharing one world frame."""

    cameras: tuple[FisheyeCamera, ...]

    def __post_init__(self) -> None:
        ids = [cam.camera_id for cam in self.cameras]
        if len(set(ids)) != len(ids):
            msg = f"duplicate camera ids in rig: {ids}"
            raise CalibrationError(msg)

    @property
    def camera_ids(self) -> list[str]:
        return [cam.camera_id for cam in self.cameras]

    def get(self, camera_id: str) -> FisheyeCamera:
        for cam in self.cameras:
            if cam.camera_id == camera_id:
                return cam
        msg = f"camera '{camera_id}' not present in calibration (known: {self.camera_ids})"
        raise CalibrationError(msg)

    def require_stereo(self) -> None:
        if len(self.cameras) < 2:
            msg = f"reconstruction needs at least two cameras, calibration has {len(self.cameras)}"
            raise CalibrationError(msg)


def project_many(
    points: ArrayLike, cam: CameraIntrinsics,
) -> tuple[NDArray[np.float64], NDArray[np.bool_]]:
    """Project object points (..., 3) without raising.

    Returns:
        Image points (..., 2) and a mask of points that are non-zero with an
        inclination inside the lens domain. Invalid entries are NaN.

    """
    o = np.asarray(points, dtype=np.float64)
    ox, oy, oz = o[..., 0], o[..., 1], o[..., 2]
    lateral = np.hypot(ox, oy)
    norm = np.hypot(lateral, oz)
    # atan2 keeps full precision near the optical axis where arccos(z/|o|) does not
    theta = np.arctan2(lateral, oz)
    valid = (norm > 0.0) & cam.lens.theta_in_domain(theta)
    rd = cam.lens.forward(np.where(valid, theta, 0.0))
    # (ox, oy) / lateral is (cos phi, sin phi); on the axis the image is the principal point
    scale = np.divide(rd, lateral, out=np.zeros_like(rd), where=lateral > 0.0)
    cx, cy = cam.principal_point
    image = np.stack((ox * scale + cx, oy * scale + cy), axis=-1)
    image[~valid] = np.nan
    return image, valid


def unproject_many(
    points: ArrayLike, cam: CameraIntrinsics,
) -> tuple[NDArray[np.float64], NDArray[np.bool_]]:
    """Un-project image points (..., 2) to unit-sphere rays without raising."""
    i = np.asarray(points, dtype=np.float64)
    cx, cy = cam.principal_point
    nx, ny = i[..., 0] - cx, i[..., 1] - cy
    rd = np.hypot(nx, ny)
    valid = cam.lens.rd_in_domain(rd)
    theta = cam.lens.inverse(np.where(valid, rd, 0.0))
    phi = np.arctan2(ny, nx)
    sin_theta = np.sin(theta)
    rays = np.stack((sin_theta * np.cos(phi), sin_theta * np.sin(phi), np.cos(theta)), axis=-1)
    rays[~valid] = np.nan
    return rays, valid


def project(o: ArrayLike, cam: CameraIntrinsics) -> ImagePoint:
    """Project a camera-frame object point to distorted image coordinates.

    The result may lie outside the sensor; callers check bounds.

    Raises:
        DegenerateInput: If the point is the optical centre.
        DomainError: If its inclination lies outside the lens domain.

    """
    point = np.asarray(o, dtype=np.float64)
    if not np.all(np.isfinite(point)):
        msg = f"object point must be finite, got {point.tolist()}"
        raise DegenerateInput(msg)
    if np.any(np.linalg.norm(point.reshape(-1, 3), axis=1) == 0.0):
        msg = "object point at the optical centre defines no ray"
        raise DegenerateInput(msg)
    image, valid = project_many(point, cam)
    if not np.all(valid):
        msg = f"object point outside the {cam.lens.kind.value} lens domain (max theta {cam.lens.max_theta:.6f} rad)"
        raise DomainError(msg)
    return image


def unproject(i: ArrayLike, cam: CameraIntrinsics) -> ObjectPoint:
    """Un-project an image point to the unit-norm ray through it.

    Raises:
        DomainError: If the radial distance exceeds the lens maximum.

    """
    rays, valid = unproject_many(i, cam)
    if not np.all(valid):
        msg = f"image point beyond the {cam.lens.kind.value} lens radius {cam.lens.max_rd:.6g} px"
        raise DomainError(msg)
    return rays


def map_point(
    i: ArrayLike,
    src: CameraIntrinsics,
    dst: CameraIntrinsics,
    src_rotation: ArrayLike | None = None,
    dst_rotation: ArrayLike | None = None,
) -> ImagePoint:
    """Map image points of one camera into another sharing its optical centre.

    Computes project(R'^T R unproject(i, src), dst) where R and R' are the
    camera-to-parent rotations of source and destination.
    """
    r_src = np.eye(3) if src_rotation is None else np.asarray(src_rotation, dtype=np.float64)
    r_dst = np.eye(3) if dst_rotation is None else np.asarray(dst_rotation, dtype=np.float64)
    rays = unproject(i, src)
    return project(rays @ (r_dst.T @ r_src).T, dst)
