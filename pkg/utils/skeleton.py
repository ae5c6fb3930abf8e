"""COCO 18-joint body model, per-frame reconstruction and limb statistics."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .camera_geometry import CameraIntrinsics, project_many, unproject_many
from .constants import DEFAULT_MAX_RESIDUAL, DEFAULT_MIN_CONF
from .errors import GeometryError, PersonMismatch
from .logger import get_logger
from .triangulation import Correspondence, ProjectionMatrix, reprojection_error, triangulate_many

logger = get_logger(__name__)

JOINT_NAMES: tuple[str, ...] = (
    "nose", "neck",
    "r_shoulder", "r_elbow", "r_wrist",
    "l_shoulder", "l_elbow", "l_wrist",
    "r_hip", "r_knee", "r_ankle",
    "l_hip", "l_knee", "l_ankle",
    "r_eye", "l_eye", "r_ear", "l_ear",
)

LIMB_PAIRS: tuple[tuple[int, int], ...] = (
    (1, 2), (1, 5), (2, 3), (3, 4), (5, 6), (6, 7),
    (1, 8), (8, 9), (9, 10), (1, 11), (11, 12), (12, 13),
    (1, 0), (0, 14), (14, 16), (0, 15), (15, 17),
)

FACIAL_JOINTS: frozenset[int] = frozenset({0, 14, 15, 16, 17})

JointObservation = tuple[float, float, float]
JointPosition = tuple[float, float, float, float]


@dataclass(frozen=True)
class BodyModel:
    """Named joints and limbs as ordered joint-index pairs."""

    joint_names: tuple[str, ...]
    limbs: tuple[tuple[int, int], ...]
    facial_joints: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        count = len(self.joint_names)
        for a, b in self.limbs:
            if not (0 <= a < count and 0 <= b < count):
                msg = f"limb ({a}, {b}) references a joint outside [0, {count - 1}]"
                raise ValueError(msg)

    @classmethod
    def coco18(cls) -> BodyModel:
        return cls(JOINT_NAMES, LIMB_PAIRS, FACIAL_JOINTS)

    @property
    def joint_count(self) -> int:
        return len(self.joint_names)

    @property
    def limb_names(self) -> list[str]:
        return [f"{self.joint_names[a]}-{self.joint_names[b]}" for a, b in self.limbs]

    def is_facial_limb(self, limb_index: int) -> bool:
        a, b = self.limbs[limb_index]
        return a in self.facial_joints and b in self.facial_joints


COCO18 = BodyModel.coco18()


def _empty_joints(count: int) -> list:
    return [None] * count


@dataclass
class Skeleton2D:
    """Per-joint (x, y, confidence) detections of one person in one frame."""

    person_id: str
    frame_index: int
    joints: list[JointObservation | None] = field(default_factory=lambda: _empty_joints(len(JOINT_NAMES)))

    def present(self, min_conf: float = 0.0) -> list[int]:
        return [i for i, joint in enumerate(self.joints) if joint is not None and joint[2] >= min_conf]


@dataclass
class Skeleton3D:
    """Per-joint (x, y, z, residual) positions of one person in one frame."""

    person_id: str
    frame_index: int
    joints: list[JointPosition | None] = field(default_factory=lambda: _empty_joints(len(JOINT_NAMES)))

    @property
    def joint_count(self) -> int:
        return sum(joint is not None for joint in self.joints)

    def position(self, joint: int) -> NDArray[np.float64] | None:
        entry = self.joints[joint]
        return None if entry is None else np.array(entry[:3])


def match_joints(a: Skeleton2D, b: Skeleton2D, min_conf: float = DEFAULT_MIN_CONF) -> list[Correspondence]:
    """Correspondences for joints present in both views with confidence >= ``min_conf``.

    Raises:
        PersonMismatch: If the skeletons carry different person ids.

    """
    if a.person_id != b.person_id:
        msg = f"cannot match joints of person '{a.person_id}' with person '{b.person_id}'"
        raise PersonMismatch(msg)
    corrs = []
    for index, (ja, jb) in enumerate(zip(a.joints, b.joints, strict=True)):
        if ja is None or jb is None:
            continue
        confidence = min(ja[2], jb[2])
        if confidence < min_conf:
            continue
        corrs.append(Correspondence((ja[0], ja[1]), (jb[0], jb[1]), confidence, joint=index))
    return corrs


def reconstruct_skeleton(
    corrs: Sequence[Correspondence],
    p_a: ProjectionMatrix,
    p_b: ProjectionMatrix,
    *,
    person_id: str = "",
    frame_index: int = 0,
    max_residual: float = DEFAULT_MAX_RESIDUAL,
    joint_count: int = len(JOINT_NAMES),
) -> Skeleton3D:
    """Triangulate every correspondence; failed or inaccurate joints are omitted."""
    skeleton = Skeleton3D(person_id, frame_index, _empty_joints(joint_count))
    for position, (corr, result) in enumerate(zip(corrs, triangulate_many(corrs, p_a, p_b), strict=True)):
        joint = corr.joint if corr.joint is not None else position
        if isinstance(result, GeometryError):
            logger.debug("Omitting joint %d (person: %s, frame: %d): %s", joint, person_id, frame_index, result)
            continue
        residual = max(reprojection_error(result, corr, p_a, p_b))
        if residual > max_residual:
            logger.debug(
                "Omitting joint %d (person: %s, frame: %d): residual %.3f px > %.3f px",
                joint, person_id, frame_index, residual, max_residual,
            )
            continue
        skeleton.joints[joint] = (float(result[0]), float(result[1]), float(result[2]), residual)
    return skeleton


def limb_lengths(s: Skeleton3D, model: BodyModel = COCO18) -> list[float | None]:
    """Euclidean limb lengths in meters; None where an endpoint is missing."""
    lengths: list[float | None] = []
    for a, b in model.limbs:
        pa, pb = s.position(a), s.position(b)
        lengths.append(None if pa is None or pb is None else float(np.linalg.norm(pa - pb)))
    return lengths


def pose_center(
    s: Skeleton2D, min_conf: float = DEFAULT_MIN_CONF, intrinsics: CameraIntrinsics | None = None,
) -> NDArray[np.float64] | None:
    """Image position summarizing the confident joints, or None when there are none.

    Without ``intrinsics`` this is the mean pixel. With them it is the pixel of
    the mean viewing ray, which stays on the person under strong fisheye
    distortion.
    """
    points = np.array([s.joints[i][:2] for i in s.present(min_conf)], dtype=np.float64).reshape(-1, 2)
    if intrinsics is None:
        return points.mean(axis=0) if len(points) else None
    rays, valid = unproject_many(points, intrinsics)
    if not np.any(valid):
        return None
    target, ok = project_many(rays[valid].mean(axis=0), intrinsics)
    return target if bool(ok) else None


@dataclass(frozen=True)
class LimbStats:
    """Distribution of one limb's realized lengths and its reconstruction frequency."""

    limb: int
    name: str
    count: int
    frequency: float
    mean: float | None
    std: float | None
    min: float | None
    q1: float | None
    median: float | None
    q3: float | None
    max: float | None


@dataclass
class LimbAccumulator:
    """Mergeable partial aggregate of limb lengths for one person."""

    limb_count: int = len(LIMB_PAIRS)
    frames: int = 0
    lengths: list[list[float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.lengths:
            self.lengths = [[] for _ in range(self.limb_count)]

    def add(self, lengths: Sequence[float | None]) -> None:
        self.frames += 1
        for index, length in enumerate(lengths):
            if length is not None:
                self.lengths[index].append(length)

    def merge(self, other: LimbAccumulator) -> LimbAccumulator:
        merged = LimbAccumulator(self.limb_count, self.frames + other.frames)
        merged.lengths = [mine + theirs for mine, theirs in zip(self.lengths, other.lengths, strict=True)]
        return merged

    def finalize(self, model: BodyModel = COCO18) -> list[LimbStats]:
        stats = []
        names = model.limb_names
        for index, values in enumerate(self.lengths):
            frequency = len(values) / self.frames if self.frames else 0.0
            if not values:
                stats.append(LimbStats(index, names[index], 0, frequency, *([None] * 7)))
                continue
            # Sorted so results do not depend on frame order
            arr = np.sort(np.array(values, dtype=np.float64))
            q1, median, q3 = np.percentile(arr, [25.0, 50.0, 75.0])
            stats.append(LimbStats(
                index, names[index], int(arr.size), frequency,
                float(np.mean(arr)), float(np.std(arr)),
                float(arr[0]), float(q1), float(median), float(q3), float(arr[-1]),
            ))
        return stats


@dataclass(frozen=True)
class PersonStats:
    person_id: str
    frames: int
    limbs: list[LimbStats]


def accumulate_stats(skeletons: Iterable[Skeleton3D], model: BodyModel = COCO18) -> list[PersonStats]:
    """Limb statistics and reconstruction frequencies per person, ordered by person id."""
    accumulators: dict[str, LimbAccumulator] = {}
    for skeleton in skeletons:
        acc = accumulators.setdefault(skeleton.person_id, LimbAccumulator(len(model.limbs)))
        acc.add(limb_lengths(skeleton, model))
    return [
        PersonStats(person_id, acc.frames, acc.finalize(model))
        for person_id, acc in sorted(accumulators.items())
    ]


def limb_length_errors(
    reconstructed: Skeleton3D, truth: Skeleton3D, model: BodyModel = COCO18,
) -> list[float | None]:
    """Absolute limb-length error per limb where both skeletons have the limb."""
    errors: list[float | None] = []
    for got, expected in zip(limb_lengths(reconstructed, model), limb_lengths(truth, model), strict=True):
        errors.append(None if got is None or expected is None else abs(got - expected))
    return errors
