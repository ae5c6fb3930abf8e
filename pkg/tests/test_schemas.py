"""Committed JSON schemas: agreement with the models and validity of command outputs."""

import json
from pathlib import Path

import pytest
from jsonschema import Draft202012Validator

import main
from tools.export_schemas import FILE_MODELS

SCHEMA_DIR = Path(__file__).resolve().parent.parent / "schemas"

SCENE = {
    "persons": [
        {"id": "a", "start": [-0.4, 0.0], "end": [-0.2, 0.3]},
        {"id": "b", "start": [0.4, 0.0]},
    ],
    "frames": 3,
    "occlusions": [{"joints": ["nose", "neck"], "start": 1, "stop": 2, "camera": "cam1"}],
}


def _committed(name):
    return json.loads((SCHEMA_DIR / f"{name}.schema.json").read_text(encoding="utf-8"))


def _outline(schema):
    """The parts of a schema object that define its shape."""
    return {
        "title": schema.get("title"),
        "properties": list(schema.get("properties", {})),
        "required": sorted(schema.get("required", [])),
        "additionalProperties": schema.get("additionalProperties"),
        "enum": schema.get("enum"),
    }


@pytest.mark.parametrize("name", sorted(FILE_MODELS))
def test_committed_schema_matches_model(name):
    committed, generated = _committed(name), FILE_MODELS[name].model_json_schema()
    assert _outline(committed) == _outline(generated)
    assert sorted(committed.get("$defs", {})) == sorted(generated.get("$defs", {}))
    for key, definition in generated.get("$defs", {}).items():
        assert _outline(committed["$defs"][key]) == _outline(definition)


@pytest.mark.parametrize("name", sorted(FILE_MODELS))
def test_committed_schema_is_valid(name):
    Draft202012Validator.check_schema(_committed(name))


def test_command_outputs_validate(tmp_path):
    config = tmp_path / "scene_config.json"
    config.write_text(json.dumps(SCENE))
    out = tmp_path / "scene"
    assert main.run(["synth", "--config", str(config), "--seed", "5", "--out-dir", str(out)]) == 0
    skeletons, stats = tmp_path / "skeletons.json", tmp_path / "stats.json"
    assert main.run([
        "reconstruct", "--calib", str(out / "calibration.json"),
        "--kp-a", str(out / "keypoints_cam0.json"), "--kp-b", str(out / "keypoints_cam1.json"),
        "--out", str(skeletons),
    ]) == 0
    assert main.run(["stats", "--in", str(skeletons), "--out", str(stats)]) == 0

    documents = {
        "calibration": out / "calibration.json",
        "keypoints": out / "keypoints_cam0.json",
        "scene": out / "scene.json",
        "skeletons": skeletons,
        "stats": stats,
    }
    for name, path in documents.items():
        validator = Draft202012Validator(_committed(name))
        errors = [error.message for error in validator.iter_errors(json.loads(path.read_text()))]
        assert errors == [], f"{path.name}: {errors}"
    ground_truth = json.loads((out / "ground_truth.json").read_text())
    assert list(Draft202012Validator(_committed("skeletons")).iter_errors(ground_truth)) == []


def test_invalid_document_is_rejected():
    validator = Draft202012Validator(_committed("keypoints"))
    record = {"frame_index": -1, "camera_id": "cam0", "person_id": "a", "joints": [[1.0, 2.0, 1.5]], "extra": 1}
    messages = " ".join(error.message for error in validator.iter_errors({"records": [record]}))
    assert "-1" in messages
    assert "1.5" in messages
    assert "extra" in messages
