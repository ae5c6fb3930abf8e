"""Rectilinear virtual views synthesized from fisheye images.

A virtual view is a pinhole camera sharing its parent fisheye camera's optical
centre, rotated by R (view-to-parent). Views are rendered through per-pixel
lookup maps holding sub-pixel source coordinates; invalid entries are NaN.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from collections import OrderedDict
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import cv2
import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial.transform import Rotation

from .camera_geometry import (
    CameraIntrinsics,
    ImagePoint,
    _as_rotation,
    map_point,
    project_many,
    unproject,
)
from .constants import (
    DEFAULT_FILL,
    DEFAULT_INTERPOLATION,
    LOOKUP_MAP_MAGIC,
    LOOKUP_MAP_SUFFIX,
    MAP_CACHE_CAPACITY,
    MAP_CACHE_ROTATION_STEP,
)
from .errors import InputError, NotRectilinear, SizeMismatch
from .lens_models import LensKind
from .logger import format_exception, get_logger

logger = get_logger(__name__)

_INTERPOLATION_FLAGS = {
    "bilinear": cv2.INTER_LINEAR,
    "nearest": cv2.INTER_NEAREST,
}
# Coordinate handed to cv2.remap for invalid entries; far enough out that no
# interpolation weight reaches the image and the border fill is used.
_OUTSIDE = -16.0
_BOUNDS_TOLERANCE = 1e-9
_HEADER = np.dtype([("magic", "S4"), ("width", "<u4"), ("height", "<u4")])


@dataclass(frozen=True, eq=False)
class VirtualView:
    """Rotated pinhole camera attached to a parent camera."""

    parent: str
    rotation: NDArray[np.float64]
    intrinsics: CameraIntrinsics

    def __post_init__(self) -> None:
        object.__setattr__(self, "rotation", _as_rotation(self.rotation, "view rotation"))
        if self.intrinsics.lens.kind is not LensKind.RECTILINEAR:
            msg = f"virtual view intrinsics must be rectilinear, got {self.intrinsics.lens.kind.value}"
            raise NotRectilinear(msg)

    @classmethod
    def from_fov(
        cls,
        parent: str,
        rotation: ArrayLike,
        fov_deg: float,
        width: int,
        height: int | None = None,
    ) -> VirtualView:
        return cls(parent, np.asarray(rotation, dtype=np.float64), CameraIntrinsics.rectilinear(fov_deg, width, height))

    @property
    def size(self) -> tuple[int, int]:
        return self.intrinsics.resolution

    @property
    def optical_axis(self) -> NDArray[np.float64]:
        """Direction of the view's optical axis in the parent frame."""
        return self.rotation[:, 2].copy()


@dataclass(frozen=True, eq=False)
class LookupMap:
    """Per destination pixel source coordinates; NaN marks invalid entries."""

    map_x: NDArray[np.float64]
    map_y: NDArray[np.float64]
    source_size: tuple[int, int]

    @property
    def size(self) -> tuple[int, int]:
        height, width = self.map_x.shape
        return width, height

    @property
    def valid(self) -> NDArray[np.bool_]:
        return np.isfinite(self.map_x) & np.isfinite(self.map_y)

    def entry(self, x: int, y: int) -> ImagePoint | None:
        point = np.array([self.map_x[y, x], self.map_y[y, x]])
        return point if np.all(np.isfinite(point)) else None

    @cached_property
    def remap_maps(self) -> tuple[NDArray[np.float32], NDArray[np.float32]]:
        """float32 maps for cv2.remap with invalid entries moved outside the image."""
        valid = self.valid
        return (
            np.where(valid, self.map_x, _OUTSIDE).astype(np.float32),
            np.where(valid, self.map_y, _OUTSIDE).astype(np.float32),
        )


def valid_fraction(lookup: LookupMap) -> float:
    return float(np.mean(lookup.valid)) if lookup.map_x.size else 0.0


def _pixel_grid(width: int, height: int) -> NDArray[np.float64]:
    xs, ys = np.meshgrid(np.arange(width, dtype=np.float64), np.arange(height, dtype=np.float64))
    return np.stack((xs, ys), axis=-1)


def _finish_map(source: NDArray[np.float64], valid: NDArray[np.bool_], src: CameraIntrinsics) -> LookupMap:
    # Entries a rounding error past the last pixel are snapped back onto the sensor
    valid = valid & src.contains(source, tolerance=_BOUNDS_TOLERANCE)
    source = src.clip(np.where(valid[..., None], source, 0.0))
    map_x = np.where(valid, source[..., 0], np.nan)
    map_y = np.where(valid, source[..., 1], np.nan)
    return LookupMap(map_x, map_y, src.resolution)


def _parent_rays(view: VirtualView, transform: NDArray[np.float64] | None = None) -> NDArray[np.float64]:
    """Unnormalized rays R K_view^-1 (u, v, 1) of every view pixel, in parent axes.

    ``transform`` is applied on the left, e.g. K_src for a pinhole source.
    """
    width, height = view.size
    h = view.rotation @ np.linalg.inv(view.intrinsics.matrix)
    if transform is not None:
        h = transform @ h
    return _pixel_grid(width, height) @ h[:, :2].T + h[:, 2]


def _homography_source(view: VirtualView, src: CameraIntrinsics) -> tuple[NDArray[np.float64], NDArray[np.bool_]]:
    """Source coordinates through K_src R K_view^-1 for a rectilinear source."""
    homog = _parent_rays(view, src.matrix)
    w = homog[..., 2]
    valid = w > 0.0
    safe_w = np.where(valid, w, 1.0)
    source = homog[..., :2] / safe_w[..., None]
    return source, valid


def build_lookup_map(view: VirtualView, src: CameraIntrinsics) -> LookupMap:
    """Lookup map from destination pixels of ``view`` to source image coordinates.

    Entry(p) = project(R unproject(p, view), src). Rays leaving the source lens
    domain or landing outside the source image become invalid entries.
    """
    width, height = view.size
    if src.lens.kind is LensKind.RECTILINEAR:
        source, valid = _homography_source(view, src)
    else:
        source, valid = project_many(_parent_rays(view), src)
    lookup = _finish_map(source, valid, src)
    logger.debug(
        "Built lookup map (parent: %s, size: %dx%d, source: %dx%d, valid: %.3f)",
        view.parent, width, height, src.width, src.height, valid_fraction(lookup),
    )
    return lookup


def remap(
    src_image: NDArray[np.uint8],
    lookup: LookupMap,
    fill: int = DEFAULT_FILL,
    interpolation: str = DEFAULT_INTERPOLATION,
) -> NDArray[np.uint8]:
    """Render the destination image by interpolating source pixels at lookup coordinates.

    Raises:
        SizeMismatch: If the image is not the map's source size.

    """
    height, width = src_image.shape[:2]
    if (width, height) != lookup.source_size:
        msg = f"image is {width}x{height} but lookup map expects {lookup.source_size[0]}x{lookup.source_size[1]}"
        raise SizeMismatch(msg)
    if interpolation not in _INTERPOLATION_FLAGS:
        msg = f"unknown interpolation '{interpolation}', expected one of {sorted(_INTERPOLATION_FLAGS)}"
        raise InputError(msg)
    map_x, map_y = lookup.remap_maps
    channels = 1 if src_image.ndim == 2 else src_image.shape[2]
    border = (fill,) * channels if channels > 1 else fill
    return cv2.remap(
        src_image,
        map_x,
        map_y,
        interpolation=_INTERPOLATION_FLAGS[interpolation],
        borderMode=cv2.BORDER_CONSTANT,
        borderValue=border,
    )


def rectilinear_homography(view_a: VirtualView, view_b: VirtualView) -> NDArray[np.float64]:
    """Homography H = K_b R_b^T R_a K_a^-1 taking view A pixels to view B pixels.

    Normalized so that H[2, 2] = 1 when that entry is non-zero.
    """
    for view in (view_a, view_b):
        if view.intrinsics.lens.kind is not LensKind.RECTILINEAR:
            msg = f"homography requires rectilinear views, got {view.intrinsics.lens.kind.value}"
            raise NotRectilinear(msg)
    h = view_b.intrinsics.matrix @ view_b.rotation.T @ view_a.rotation @ np.linalg.inv(view_a.intrinsics.matrix)
    scale = h[2, 2] if abs(h[2, 2]) > 1e-15 else np.linalg.norm(h)
    return h / scale


def apply_homography(h: ArrayLike, points: ArrayLike) -> NDArray[np.float64]:
    """Map (..., 2) points through a homography with homogeneous normalization."""
    pts = np.asarray(points, dtype=np.float64)
    homog = pts @ np.asarray(h)[:, :2].T + np.asarray(h)[:, 2]
    return homog[..., :2] / homog[..., 2:3]


def _look_rotation(axis: NDArray[np.float64], up_hint: NDArray[np.float64] | None) -> NDArray[np.float64]:
    """Rotation whose third column is ``axis`` and whose second column follows ``up_hint``."""
    z = np.array([0.0, 0.0, 1.0])
    if up_hint is not None:
        down = up_hint - np.dot(up_hint, axis) * axis
        norm = np.linalg.norm(down)
        if norm > 1e-9:
            y_axis = down / norm
            x_axis = np.cross(y_axis, axis)
            return np.column_stack((x_axis, y_axis, axis))
    # Minimal rotation taking the optical axis onto the target ray
    cross = np.cross(z, axis)
    sin_angle = np.linalg.norm(cross)
    angle = np.arctan2(sin_angle, np.dot(z, axis))
    if sin_angle < 1e-15:
        rotvec = np.array([np.pi, 0.0, 0.0]) if angle > np.pi / 2 else np.zeros(3)
    else:
        rotvec = cross / sin_angle * angle
    return Rotation.from_rotvec(rotvec).as_matrix()


def focus_view(
    view: VirtualView,
    target: ArrayLike,
    parent: CameraIntrinsics,
    gravity: ArrayLike | None = None,
) -> VirtualView:
    """Re-orient ``view`` so its principal point looks at ``target`` in the parent image.

    With a gravity direction (parent frame) the view is rolled so its +y axis
    points along gravity projected onto the image plane, giving upright framing.
    Without one, or when gravity is parallel to the target ray, the minimal
    rotation from the optical axis onto the ray is used.

    Raises:
        DomainError: If the target cannot be un-projected.

    """
    ray = unproject(target, parent)
    up_hint = None if gravity is None else np.asarray(gravity, dtype=np.float64)
    rotation = _look_rotation(ray / np.linalg.norm(ray), up_hint)
    return replace(view, rotation=rotation)


def view_to_parent(point: ArrayLike, view: VirtualView, parent: CameraIntrinsics) -> ImagePoint:
    """Map view pixels to fisheye pixels of the parent camera."""
    return map_point(point, view.intrinsics, parent, src_rotation=view.rotation)


def parent_to_view(point: ArrayLike, view: VirtualView, parent: CameraIntrinsics) -> ImagePoint:
    """Map fisheye pixels of the parent camera into the view."""
    return map_point(point, parent, view.intrinsics, dst_rotation=view.rotation)


def save_lookup_map(path: str | os.PathLike[str], lookup: LookupMap) -> None:
    """Write the FLKM binary format: header then little-endian float32 (x, y) pairs."""
    width, height = lookup.size
    header = np.array([(LOOKUP_MAP_MAGIC, width, height)], dtype=_HEADER)
    pairs = np.stack((lookup.map_x, lookup.map_y), axis=-1).astype("<f4")
    with open(path, "wb") as handle:
        handle.write(header.tobytes())
        handle.write(pairs.tobytes())


def load_lookup_map(path: str | os.PathLike[str], source_size: tuple[int, int]) -> LookupMap:
    """Read an FLKM file; the source image size is not stored and must be supplied."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.itemsize:
        msg = f"lookup map file {path} is truncated"
        raise InputError(msg)
    header = np.frombuffer(raw[: _HEADER.itemsize], dtype=_HEADER)[0]
    if header["magic"] != LOOKUP_MAP_MAGIC:
        msg = f"lookup map file {path} has bad magic {header['magic']!r}"
        raise InputError(msg)
    width, height = int(header["width"]), int(header["height"])
    pairs = np.frombuffer(raw[_HEADER.itemsize:], dtype="<f4")
    if pairs.size != width * height * 2:
        msg = f"lookup map file {path} holds {pairs.size} floats, expected {width * height * 2}"
        raise InputError(msg)
    pairs = pairs.reshape(height, width, 2).astype(np.float64)
    return LookupMap(pairs[..., 0].copy(), pairs[..., 1].copy(), tuple(source_size))


def _map_cache_key(view: VirtualView, src: CameraIntrinsics) -> str:
    """Hash of parent id, quantized rotation, K, size and source intrinsics."""
    rotvec = Rotation.from_matrix(view.rotation).as_rotvec()
    quantized = np.round(rotvec / MAP_CACHE_ROTATION_STEP).astype(np.int64)
    key = {
        "parent": view.parent,
        "rotation": quantized.tolist(),
        "K": np.round(view.intrinsics.matrix, 9).tolist(),
        "size": list(view.size),
        "source": {
            "kind": src.lens.kind.value,
            "focal_length": round(src.lens.focal_length, 9),
            "principal_point": [round(v, 9) for v in src.principal_point],
            "resolution": list(src.resolution),
        },
    }
    return hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()


# Module-level lookup map cache (least recently used first) and lock
_map_cache: OrderedDict[str, LookupMap] = OrderedDict()
_map_cache_lock = threading.Lock()


def get_lookup_map(view: VirtualView, src: CameraIntrinsics, cache_dir: str | None = None) -> LookupMap:
    """Get or build the lookup map for ``view`` over ``src``.

    Maps are reused for views whose rotation agrees within the quantization
    step. With ``cache_dir`` set, maps are also persisted as FLKM files.
    """
    key = _map_cache_key(view, src)
    with _map_cache_lock:
        cached = _map_cache.get(key)
        if cached is not None:
            _map_cache.move_to_end(key)
            return cached

    lookup: LookupMap | None = None
    disk_path = Path(cache_dir) / f"{key}{LOOKUP_MAP_SUFFIX}" if cache_dir else None
    if disk_path is not None and disk_path.is_file():
        try:
            lookup = load_lookup_map(disk_path, src.resolution)
            logger.debug("Loaded lookup map from %s", disk_path)
        except InputError as e:
            logger.warning("Ignoring unreadable cached lookup map %s: %s", disk_path, format_exception(e))
    if lookup is None:
        lookup = build_lookup_map(view, src)
        if disk_path is not None:
            try:
                disk_path.parent.mkdir(parents=True, exist_ok=True)
                save_lookup_map(disk_path, lookup)
            except OSError as e:
                logger.warning("Failed to persist lookup map to %s: %s", disk_path, format_exception(e))

    with _map_cache_lock:
        # A concurrent builder may have won; keep the first stored map
        lookup = _map_cache.setdefault(key, lookup)
        _map_cache.move_to_end(key)
        while len(_map_cache) > MAP_CACHE_CAPACITY:
            evicted, _ = _map_cache.popitem(last=False)
            logger.debug("Evicted lookup map %s from the in-memory cache", evicted[:12])
        return lookup


def reset_map_cache() -> None:
    """Clear the in-memory lookup map cache (useful for testing)."""
    with _map_cache_lock:
        _map_cache.clear()


def read_image(path: str | os.PathLike[str]) -> NDArray[np.uint8]:
    """Read an 8-bit gray or RGB image (PNG, PGM, PPM) as H x W or H x W x 3."""
    image = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if image is None:
        msg = f"cannot read image {path}"
        raise InputError(msg)
    if image.dtype != np.uint8:
        msg = f"image {path} must be 8-bit, got {image.dtype}"
        raise InputError(msg)
    if image.ndim == 3 and image.shape[2] == 4:
        image = cv2.cvtColor(image, cv2.COLOR_BGRA2BGR)
    if image.ndim == 3 and image.shape[2] == 1:
        image = image[..., 0]
    return image


def write_image(path: str | os.PathLike[str], image: NDArray[np.uint8]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), image):
        msg = f"cannot write image {path}"
        raise InputError(msg)
