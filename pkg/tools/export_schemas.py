"""Command writing the JSON schemas of every file format."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from tools.base import Command, CommandResult
from utils.errors import OutputError
from utils.logger import get_logger
from utils.schemas import CalibrationFile, KeypointFile, SceneConfig, SkeletonFile, StatsFile

logger = get_logger(__name__)

FILE_MODELS: dict[str, type[BaseModel]] = {
    "calibration": CalibrationFile,
    "keypoints": KeypointFile,
    "skeletons": SkeletonFile,
    "stats": StatsFile,
    "scene": SceneConfig,
}


def schema_text(model: type[BaseModel]) -> str:
    return json.dumps(model.model_json_schema(), indent=2) + "\n"


class ExportSchemasCommand(Command):
    action = "write schemas"

    def run(self, params: dict[str, Any]) -> CommandResult:
        out_dir = Path(params.get("out_dir") or ".")
        written = []
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            for name, model in FILE_MODELS.items():
                path = out_dir / f"{name}.schema.json"
                path.write_text(schema_text(model), encoding="utf-8")
                written.append(str(path))
        except OSError as e:
            logger.error("Schema export failed (out_dir: %s): %s", out_dir, e)
            msg = f"cannot write schemas to {out_dir}: {e.strerror or e}"
            raise OutputError(msg) from e

        logger.info("JSON schemas written (out_dir: %s, count: %d)", out_dir, len(written))
        return CommandResult({"out_dir": str(out_dir), "files": written}, [f"Wrote {path}" for path in written])
