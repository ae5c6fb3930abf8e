"""Calibration provider for the fisheye pose toolkit.

Loads calibration files, converts them into a camera rig and validates every
camera with a lightweight projection sanity check, so commands fail early with
an input error instead of deep inside the geometry.
"""

from __future__ import annotations

import os

import numpy as np

from utils.camera_geometry import CameraRig, FisheyeCamera, project, unproject
from utils.config_builder import parse_json_document
from utils.errors import CalibrationError, FisheyePoseError
from utils.logger import format_exception, get_logger
from utils.schemas import CalibrationFile

logger = get_logger(__name__)


class CalibrationProvider:
    """Provider of validated camera rigs.

    Parses calibration JSON, builds intrinsics and world poses and performs a
    round trip through each lens to ensure the calibration is usable.
    """

    def load(self, path: str | os.PathLike[str]) -> CameraRig:
        logger.info("Loading calibration from %s", path)
        document = parse_json_document(path, CalibrationFile, CalibrationError)
        try:
            rig = document.to_rig()
        except CalibrationError:
            raise
        except FisheyePoseError as e:
            msg = f"calibration {path} is invalid: {format_exception(e)}"
            logger.exception("Calibration validation failed")
            raise CalibrationError(msg) from e
        self._validate_calibration(rig)
        return rig

    def _validate_calibration(self, rig: CameraRig) -> None:
        for camera in rig.cameras:
            try:
                self._sanity_check(camera)
            except FisheyePoseError as e:
                msg = f"camera {camera.camera_id} failed the projection sanity check: {format_exception(e)}"
                logger.exception("Calibration validation failed")
                raise CalibrationError(msg) from e
        logger.info("Calibration validated successfully (cameras: %s)", rig.camera_ids)

    @staticmethod
    def _sanity_check(camera: FisheyeCamera) -> None:
        intr = camera.intrinsics
        on_axis = project(np.array([0.0, 0.0, 1.0]), intr)
        if not np.allclose(on_axis, intr.center, atol=1e-9):
            msg = f"on-axis ray maps to {on_axis.tolist()} instead of the principal point"
            raise CalibrationError(msg)
        # A ray halfway into the lens domain must survive a projection round trip
        theta = 0.5 * intr.lens.max_theta
        ray = np.array([np.sin(theta), 0.0, np.cos(theta)])
        back = unproject(project(ray, intr), intr)
        if not np.allclose(back, ray, atol=1e-9):
            msg = "projection round trip does not reproduce the ray"
            raise CalibrationError(msg)
