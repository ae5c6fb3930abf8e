"""Command rendering an upright rectilinear view from a fisheye image."""

from __future__ import annotations

from typing import Any

import numpy as np

from provider.calibration import CalibrationProvider
from tools.base import Command, CommandResult, option
from utils.camera_geometry import rotation_from_euler
from utils.errors import FisheyePoseError, InputError
from utils.logger import get_logger
from utils.timing import StageTimer
from utils.view_synthesis import (
    VirtualView,
    focus_view,
    get_lookup_map,
    read_image,
    remap,
    valid_fraction,
    write_image,
)

logger = get_logger(__name__)


class RemapViewCommand(Command):
    """Wraps lookup map construction and remapping and writes a PNG."""

    action = "remap view"

    def run(self, params: dict[str, Any]) -> CommandResult:
        settings = self.settings
        camera_id = params.get("camera")
        out_path = params.get("out")
        fov = float(option(params, "fov", settings.view_fov))
        size = int(option(params, "size", settings.view_size))
        fill = int(option(params, "fill", settings.fill))
        interpolation = option(params, "interpolation", settings.interpolation)
        target_x, target_y = params.get("target_x"), params.get("target_y")
        timer = StageTimer()

        try:
            if (target_x is None) != (target_y is None):
                msg = "--target-x and --target-y must be given together"
                raise InputError(msg)
            rig = CalibrationProvider().load(params["calib"])
            camera = rig.get(camera_id)
            image = read_image(params["image"])

            with timer.stage("view generation"):
                base = VirtualView.from_fov(camera.camera_id, np.eye(3), fov, size)
                if target_x is not None:
                    target = np.array([float(target_x), float(target_y)])
                    view = focus_view(base, target, camera.intrinsics, camera.gravity_in_camera)
                else:
                    rotation = rotation_from_euler(
                        float(option(params, "yaw", 0.0)),
                        float(option(params, "pitch", 0.0)),
                        float(option(params, "roll", 0.0)),
                    )
                    view = VirtualView.from_fov(camera.camera_id, rotation, fov, size)
                lookup = get_lookup_map(view, camera.intrinsics, settings.map_cache_dir)
                rendered = remap(image, lookup, fill=fill, interpolation=interpolation)
            write_image(out_path, rendered)
        except FisheyePoseError as e:
            logger.error("Remap failed (camera: %s, out: %s): %s", camera_id, out_path, e)
            raise

        fraction = valid_fraction(lookup)
        if fraction == 0.0:
            logger.warning(
                "View lies entirely outside camera %s's field of view; output is fill-colored (%s)",
                camera.camera_id, out_path,
            )
        logger.info(
            "Remapped view written (camera: %s, fov: %.1f, size: %d, valid: %.3f, out: %s)",
            camera.camera_id, fov, size, fraction, out_path,
        )

        lines = [f"Wrote {out_path} ({size}x{size}, {fraction:.1%} of pixels inside the lens image)"]
        if fraction == 0.0:
            lines.append("Warning: the view does not overlap the fisheye image.")
        if params.get("timings"):
            lines.extend(timer.report())
        return CommandResult(
            {
                "camera": camera.camera_id,
                "out": str(out_path),
                "valid_fraction": fraction,
                "rotation": view.rotation.tolist(),
                "timings": timer.stages,
            },
            lines,
        )
