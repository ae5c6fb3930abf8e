"""Frame-level reconstruction: keypoint files in, 3D skeletons out.

For every (frame, person) seen by both cameras, each camera's detections are
expressed in a rectilinear virtual view (the record's own view, or one
re-focused on the person's pose centre for raw fisheye detections), the views'
projection matrices are formed and the matched joints triangulated.

Every person-frame present in either file yields exactly one skeleton. Those
without a usable view pair have no joints, so they still count towards the
frame totals that reconstruction frequencies are computed over.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .camera_geometry import CameraRig, FisheyeCamera, project_many, unproject_many
from .constants import DEFAULT_MAX_RESIDUAL, DEFAULT_MIN_CONF, DEFAULT_VIEW_FOV, DEFAULT_VIEW_SIZE
from .errors import GeometryError, KeypointFileError
from .logger import format_exception, get_logger
from .schemas import KeypointFile, KeypointRecord
from .skeleton import Skeleton2D, Skeleton3D, match_joints, pose_center, reconstruct_skeleton
from .timing import StageTimer
from .triangulation import projection_matrix
from .view_synthesis import VirtualView, focus_view

logger = get_logger(__name__)


@dataclass(frozen=True)
class ReconstructionOptions:
    min_conf: float = DEFAULT_MIN_CONF
    max_residual: float = DEFAULT_MAX_RESIDUAL
    fov: float = DEFAULT_VIEW_FOV
    size: int = DEFAULT_VIEW_SIZE
    workers: int = 1


@dataclass
class ReconstructionResult:
    """Skeletons in frame/person order; ``skipped`` counts those left without joints for lack of a view pair."""

    skeletons: list[Skeleton3D]
    skipped: int = 0
    timer: StageTimer = field(default_factory=StageTimer)


def _single_camera(keypoints: KeypointFile, label: str) -> str | None:
    camera_ids = {record.camera_id for record in keypoints.records}
    if len(camera_ids) > 1:
        msg = f"{label} mixes cameras {sorted(camera_ids)}; expected one camera per file"
        raise KeypointFileError(msg)
    return next(iter(camera_ids), None)


def _check_bounds(record: KeypointRecord, camera: FisheyeCamera) -> None:
    width, height = (record.view.width, record.view.height) if record.view else camera.intrinsics.resolution
    for index, joint in enumerate(record.joints):
        if joint is None:
            continue
        x, y, _ = joint
        if not (0.0 <= x <= width and 0.0 <= y <= height):
            msg = (
                f"joint {index} of person {record.person_id} in frame {record.frame_index} "
                f"lies outside the {width}x{height} image of camera {record.camera_id}"
            )
            raise KeypointFileError(msg)


def pair_records(
    kp_a: KeypointFile, kp_b: KeypointFile, rig: CameraRig,
) -> list[tuple[KeypointRecord, KeypointRecord]]:
    """Records of both files sharing (frame, person), ordered by frame then person."""
    camera_a, camera_b = _single_camera(kp_a, "keypoint file A"), _single_camera(kp_b, "keypoint file B")
    if camera_a is not None and camera_a == camera_b:
        msg = f"both keypoint files come from camera {camera_a}"
        raise KeypointFileError(msg)
    for keypoints in (kp_a, kp_b):
        for record in keypoints.records:
            _check_bounds(record, rig.get(record.camera_id))

    by_key = {(r.frame_index, r.person_id): r for r in kp_b.records}
    pairs = []
    for record in sorted(kp_a.records, key=lambda r: (r.frame_index, r.person_id)):
        other = by_key.get((record.frame_index, record.person_id))
        if other is None:
            logger.debug("Person %s in frame %d seen by one camera only", record.person_id, record.frame_index)
            continue
        pairs.append((record, other))
    return pairs


def view_skeleton(
    record: KeypointRecord, camera: FisheyeCamera, options: ReconstructionOptions,
) -> tuple[VirtualView, Skeleton2D] | None:
    """The virtual view a record is triangulated in, with its detections in view pixels."""
    skeleton = record.to_skeleton()
    if record.view is not None:
        return record.view.to_view(camera.camera_id), skeleton

    target = pose_center(skeleton, options.min_conf, camera.intrinsics)
    if target is None:
        return None
    base = VirtualView.from_fov(camera.camera_id, np.eye(3), options.fov, options.size)
    view = focus_view(base, target, camera.intrinsics, camera.gravity_in_camera)

    joints: list = [None] * len(skeleton.joints)
    present = [i for i, joint in enumerate(skeleton.joints) if joint is not None]
    if present:
        fisheye = np.array([skeleton.joints[i][:2] for i in present])
        rays, valid = unproject_many(fisheye, camera.intrinsics)
        in_view, projected = project_many(np.where(valid[:, None], rays @ view.rotation, 1.0), view.intrinsics)
        inside = valid & projected & view.intrinsics.contains(in_view)
        for row, index in enumerate(present):
            if inside[row]:
                joints[index] = (float(in_view[row, 0]), float(in_view[row, 1]), skeleton.joints[index][2])
    return view, Skeleton2D(skeleton.person_id, skeleton.frame_index, joints)


def reconstruct_pair(
    record_a: KeypointRecord,
    record_b: KeypointRecord,
    rig: CameraRig,
    options: ReconstructionOptions,
    timer: StageTimer | None = None,
) -> Skeleton3D | None:
    """Reconstruct one person in one frame; None when a camera yields no usable view."""
    timer = timer or StageTimer()
    camera_a, camera_b = rig.get(record_a.camera_id), rig.get(record_b.camera_id)
    with timer.stage("view focusing"):
        framed_a = view_skeleton(record_a, camera_a, options)
        framed_b = view_skeleton(record_b, camera_b, options)
    if framed_a is None or framed_b is None:
        return None
    (view_a, skeleton_a), (view_b, skeleton_b) = framed_a, framed_b
    with timer.stage("reconstruction"):
        p_a = projection_matrix(view_a, camera_a.world_pose)
        p_b = projection_matrix(view_b, camera_b.world_pose)
        corrs = match_joints(skeleton_a, skeleton_b, options.min_conf)
        return reconstruct_skeleton(
            corrs, p_a, p_b,
            person_id=record_a.person_id,
            frame_index=record_a.frame_index,
            max_residual=options.max_residual,
        )


def reconstruct_sequence(
    kp_a: KeypointFile, kp_b: KeypointFile, rig: CameraRig, options: ReconstructionOptions,
) -> ReconstructionResult:
    """Reconstruct all person-frames frame-parallel; output keeps frame/person order.

    Person-frames seen by one camera only, or without a usable view in either
    camera, are returned as skeletons without joints and counted in ``skipped``.
    """
    rig.require_stereo()
    pairs = pair_records(kp_a, kp_b, rig)
    timer = StageTimer()
    lock = threading.Lock()

    def _run(pair: tuple[KeypointRecord, KeypointRecord]) -> Skeleton3D | None:
        local = StageTimer()
        try:
            return reconstruct_pair(pair[0], pair[1], rig, options, local)
        except GeometryError as e:
            logger.warning(
                "No view pair for person %s in frame %d: %s", pair[0].person_id, pair[0].frame_index,
                format_exception(e),
            )
            return None
        finally:
            with lock:
                for name, seconds in local.stages.items():
                    timer.stages[name] = timer.stages.get(name, 0.0) + seconds

    with ThreadPoolExecutor(max_workers=max(1, options.workers)) as pool:
        results = list(pool.map(_run, pairs))

    skeletons = [
        skeleton if skeleton is not None else Skeleton3D(record.person_id, record.frame_index)
        for (record, _), skeleton in zip(pairs, results, strict=True)
    ]
    paired = {(record.frame_index, record.person_id) for record, _ in pairs}
    seen_once = sorted({(r.frame_index, r.person_id) for kp in (kp_a, kp_b) for r in kp.records} - paired)
    skeletons.extend(Skeleton3D(person_id, frame_index) for frame_index, person_id in seen_once)
    skeletons.sort(key=lambda s: (s.frame_index, s.person_id))

    skipped = sum(result is None for result in results) + len(seen_once)
    logger.info(
        "Reconstructed %d person-frames, %d without a usable view pair (min_conf: %.2f, max_residual: %.2f px)",
        len(skeletons), skipped, options.min_conf, options.max_residual,
    )
    return ReconstructionResult(skeletons, skipped, timer)
