"""Command generating a ground-truthed synthetic two-camera scene."""

from __future__ import annotations

from pathlib import Path
from typing import Any

from tools.base import Command, CommandResult
from utils.config_builder import parse_json_document, write_json_document
from utils.errors import FisheyePoseError, SceneConfigError
from utils.logger import get_logger
from utils.schemas import SceneConfig
from utils.synthetic import generate_scene, person_rings

logger = get_logger(__name__)


class SynthSceneCommand(Command):
    """Writes calibration, per-camera keypoints, ground truth and the scene config."""

    action = "generate synthetic scene"

    def run(self, params: dict[str, Any]) -> CommandResult:
        out_dir = Path(params.get("out_dir") or ".")
        seed = int(params.get("seed") or 0)

        try:
            config_path = params.get("config")
            config = (
                parse_json_document(config_path, SceneConfig, SceneConfigError)
                if config_path else SceneConfig()
            )
            scene = generate_scene(config, seed=seed)

            written = [out_dir / "calibration.json"]
            write_json_document(written[0], scene.calibration)
            for camera_id, keypoints in scene.keypoints.items():
                path = out_dir / f"keypoints_{camera_id}.json"
                write_json_document(path, keypoints)
                written.append(path)
            for name, document in (("ground_truth.json", scene.ground_truth), ("scene.json", scene.config)):
                write_json_document(out_dir / name, document)
                written.append(out_dir / name)
        except FisheyePoseError as e:
            logger.error("Scene generation failed (out_dir: %s): %s", out_dir, e)
            raise

        rings = person_rings(scene)
        logger.info("Synthetic scene written (out_dir: %s, seed: %d, files: %d)", out_dir, seed, len(written))
        lines = [f"Wrote {path}" for path in written]
        lines.extend(
            f"Person {person}: " + ", ".join(f"{cam} {ring}" for cam, ring in per_camera.items())
            for person, per_camera in rings.items()
        )
        return CommandResult(
            {"out_dir": str(out_dir), "seed": seed, "files": [str(path) for path in written], "rings": rings},
            lines,
        )
