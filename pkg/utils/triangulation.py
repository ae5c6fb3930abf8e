"""Projection matrices of rectilinear views and two-view DLT triangulation.

A virtual view with intrinsics K and view-to-parent rotation R, attached to a
fisheye camera with world pose W (camera-to-world), has the projection matrix

    P = K [I | 0] [[R^T, 0], [0, 1]] W^-1

World points are triangulated from one image point per view by assembling
the homogeneous system A x = 0 from the rows (x p_2 - p_0) and (y p_2 - p_1)
of each view and taking the right singular vector of the smallest singular value.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .camera_geometry import ImagePoint, RigidPose
from .constants import (
    CAMERA_CENTER_TOLERANCE,
    DEGENERATE_SINGULAR_RATIO,
    RANK_DEFICIENCY_RATIO,
)
from .errors import BehindCamera, DegenerateGeometry, GeometryError, NotRectilinear, SingularPose
from .lens_models import LensKind
from .view_synthesis import VirtualView

ProjectionMatrix = NDArray[np.float64]
WorldPoint = NDArray[np.float64]


@dataclass(frozen=True)
class Correspondence:
    """One joint observed in two views; confidence is the weaker of the two."""

    point_a: tuple[float, float]
    point_b: tuple[float, float]
    confidence: float = 1.0
    joint: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "point_a", (float(self.point_a[0]), float(self.point_a[1])))
        object.__setattr__(self, "point_b", (float(self.point_b[0]), float(self.point_b[1])))
        if not np.all(np.isfinite(self.point_a + self.point_b)):
            msg = "correspondence image points must be finite"
            raise DegenerateGeometry(msg)
        if not 0.0 <= self.confidence <= 1.0:
            msg = f"confidence must lie in [0, 1], got {self.confidence}"
            raise ValueError(msg)


def projection_matrix(view: VirtualView, world_pose: RigidPose) -> ProjectionMatrix:
    """Projection matrix of a rectilinear view inside a world-posed rig.

    Raises:
        NotRectilinear: If the view's lens is not rectilinear.
        SingularPose: If the world pose cannot be inverted.

    """
    if view.intrinsics.lens.kind is not LensKind.RECTILINEAR:
        msg = f"projection matrices need rectilinear views, got {view.intrinsics.lens.kind.value}"
        raise NotRectilinear(msg)
    w = world_pose.matrix
    if abs(np.linalg.det(w)) < 1e-12:
        msg = "world pose is not invertible"
        raise SingularPose(msg)
    view_rotation = np.eye(4)
    view_rotation[:3, :3] = view.rotation.T
    return view.intrinsics.matrix @ np.eye(3, 4) @ view_rotation @ np.linalg.inv(w)


def point_depth(p: ProjectionMatrix, x: ArrayLike) -> NDArray[np.float64] | float:
    """Signed depth of world points in front of the camera described by ``p``."""
    pts = np.asarray(x, dtype=np.float64)
    homog = pts @ p[2, :3] + p[2, 3]
    m = p[:, :3]
    depth = np.sign(np.linalg.det(m)) * homog / np.linalg.norm(m[2])
    return float(depth) if np.ndim(depth) == 0 else depth


def project_point(p: ProjectionMatrix, x: ArrayLike) -> tuple[ImagePoint, NDArray[np.float64] | float]:
    """Project world points through P; returns pixels and the homogeneous w."""
    pts = np.asarray(x, dtype=np.float64)
    homog = pts @ p[:, :3].T + p[:, 3]
    w = homog[..., 2]
    pixels = homog[..., :2] / w[..., None]
    return pixels, (float(w) if np.ndim(w) == 0 else w)


def camera_center(p: ProjectionMatrix) -> NDArray[np.float64]:
    """Homogeneous camera centre (right null vector of P), scaled to w = 1 when finite."""
    _, _, vt = np.linalg.svd(p)
    center = vt[-1]
    if abs(center[3]) > 1e-15:
        center = center / center[3]
    return center


def _world_conditioning(center_a: NDArray[np.float64], center_b: NDArray[np.float64]) -> NDArray[np.float64]:
    """Homogeneous similarity taking unit-baseline coordinates about the centres' midpoint to world."""
    u = np.eye(4)
    if abs(center_a[3]) > 1e-15 and abs(center_b[3]) > 1e-15:
        baseline = float(np.linalg.norm(center_a[:3] - center_b[:3]))
        if baseline > CAMERA_CENTER_TOLERANCE:
            u[:3, :3] *= baseline
            u[:3, 3] = 0.5 * (center_a[:3] + center_b[:3])
    return u


def _design_matrix(corr: Correspondence, p_a: ProjectionMatrix, p_b: ProjectionMatrix) -> NDArray[np.float64]:
    rows = []
    for (x, y), p in zip((corr.point_a, corr.point_b), (p_a, p_b), strict=True):
        rows.append(x * p[2] - p[0])
        rows.append(y * p[2] - p[1])
    a = np.array(rows)
    # Row equilibration keeps both views equally weighted
    return a / np.linalg.norm(a, axis=1, keepdims=True)


def triangulate_dlt(corr: Correspondence, p_a: ProjectionMatrix, p_b: ProjectionMatrix) -> WorldPoint:
    """Triangulate one correspondence with the direct linear transform.

    The system is solved in coordinates centred between the two cameras and
    scaled by their baseline, then mapped back to the world frame.

    Raises:
        DegenerateGeometry: If the camera centres coincide or the rays are parallel.
        BehindCamera: If the point has non-positive depth in either view.

    """
    center_a, center_b = camera_center(p_a), camera_center(p_b)
    if abs(center_a[3]) > 1e-15 and abs(center_b[3]) > 1e-15:
        if np.linalg.norm(center_a[:3] - center_b[:3]) <= CAMERA_CENTER_TOLERANCE:
            msg = "camera centres coincide; no parallax to triangulate from"
            raise DegenerateGeometry(msg)

    u = _world_conditioning(center_a, center_b)
    a = _design_matrix(corr, p_a @ u, p_b @ u)
    _, singular, vt = np.linalg.svd(a)
    if singular[2] <= RANK_DEFICIENCY_RATIO * singular[0]:
        msg = "design matrix is rank deficient; the two views do not constrain the point"
        raise DegenerateGeometry(msg)
    if singular[2] > 0.0 and singular[3] / singular[2] > DEGENERATE_SINGULAR_RATIO:
        msg = "two smallest singular values coincide; rays are parallel"
        raise DegenerateGeometry(msg)

    solution = vt[-1]
    scale = np.linalg.norm(solution[:3])
    if abs(solution[3]) <= CAMERA_CENTER_TOLERANCE * scale:
        msg = "triangulated point lies at infinity; rays are parallel"
        raise DegenerateGeometry(msg)
    homog = u @ solution
    x = homog[:3] / homog[3]

    depth_a, depth_b = point_depth(p_a, x), point_depth(p_b, x)
    if depth_a <= 0.0 or depth_b <= 0.0:
        msg = f"triangulated point is behind a camera (depths {depth_a:.4g}, {depth_b:.4g})"
        raise BehindCamera(msg)
    return x


def reprojection_error(
    x: ArrayLike, corr: Correspondence, p_a: ProjectionMatrix, p_b: ProjectionMatrix,
) -> tuple[float, float]:
    """Pixel distance between each view's measured point and the projection of ``x``.

    Raises:
        BehindCamera: If ``x`` has non-positive depth in either view.

    """
    point = np.asarray(x, dtype=np.float64)
    residuals = []
    for measured, p in ((corr.point_a, p_a), (corr.point_b, p_b)):
        if point_depth(p, point) <= 0.0:
            msg = "point is behind the camera; reprojection undefined"
            raise BehindCamera(msg)
        pixel, _ = project_point(p, point)
        residuals.append(float(np.linalg.norm(pixel - np.asarray(measured))))
    return residuals[0], residuals[1]


def triangulate_many(
    corrs: Sequence[Correspondence], p_a: ProjectionMatrix, p_b: ProjectionMatrix,
) -> list[WorldPoint | GeometryError]:
    """Triangulate a batch; failed items carry their error instead of a point."""
    results: list[WorldPoint | GeometryError] = []
    for corr in corrs:
        try:
            results.append(triangulate_dlt(corr, p_a, p_b))
        except GeometryError as e:
            results.append(e)
    return results
