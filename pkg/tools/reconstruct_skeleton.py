"""Command triangulating 3D skeletons from two cameras' keypoint files."""

from __future__ import annotations

from typing import Any

from provider.calibration import CalibrationProvider
from tools.base import Command, CommandResult, option
from utils.config_builder import parse_json_document, write_json_document
from utils.errors import FisheyePoseError, KeypointFileError
from utils.logger import get_logger
from utils.pipeline import ReconstructionOptions, reconstruct_sequence
from utils.schemas import KeypointFile, SkeletonFile, SkeletonRecord

logger = get_logger(__name__)


class ReconstructSkeletonCommand(Command):
    """Matches joints, forms projection matrices and triangulates each frame."""

    action = "reconstruct skeletons"

    def run(self, params: dict[str, Any]) -> CommandResult:
        settings = self.settings
        out_path = params.get("out")

        try:
            options = ReconstructionOptions(
                min_conf=float(option(params, "min_conf", settings.min_conf)),
                max_residual=float(option(params, "max_residual", settings.max_residual)),
                fov=float(option(params, "fov", settings.view_fov)),
                size=int(option(params, "size", settings.view_size)),
                workers=settings.workers,
            )
            rig = CalibrationProvider().load(params["calib"])
            kp_a = parse_json_document(params["kp_a"], KeypointFile, KeypointFileError)
            kp_b = parse_json_document(params["kp_b"], KeypointFile, KeypointFileError)

            result = reconstruct_sequence(kp_a, kp_b, rig, options)
            document = SkeletonFile(records=[SkeletonRecord.from_skeleton(s) for s in result.skeletons])
            write_json_document(out_path, document)
        except FisheyePoseError as e:
            logger.error("Reconstruction failed (out: %s): %s", out_path, e)
            raise

        joints = sum(s.joint_count for s in result.skeletons)
        logger.info(
            "Skeletons written (records: %d, joints: %d, without view pair: %d, out: %s)",
            len(result.skeletons), joints, result.skipped, out_path,
        )
        lines = [f"Wrote {len(result.skeletons)} skeleton records ({joints} joints) to {out_path}"]
        if result.skipped:
            lines.append(f"{result.skipped} person-frames had no usable view pair and were written without joints")
        if params.get("timings"):
            lines.extend(result.timer.report())
        return CommandResult(
            {
                "out": str(out_path),
                "records": len(result.skeletons),
                "joints": joints,
                "skipped": result.skipped,
                "timings": result.timer.stages,
            },
            lines,
        )
