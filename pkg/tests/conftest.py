"""Shared fixtures: lenses, intrinsics, rigs and small synthetic scenes."""

from __future__ import annotations

import numpy as np
import pytest

from utils.camera_geometry import CameraIntrinsics
from utils.config_builder import reset_settings
from utils.lens_models import LensKind, LensModel
from utils.schemas import SceneConfig
from utils.synthetic import build_rig
from utils.view_synthesis import reset_map_cache


@pytest.fixture(autouse=True)
def _clean_caches(monkeypatch):
    for name in ("FSP_WORKERS", "FSP_MAP_CACHE_DIR", "FSP_VIEW_FOV", "FSP_VIEW_SIZE",
                 "FSP_MIN_CONF", "FSP_MAX_RESIDUAL", "FSP_INTERPOLATION", "FSP_FILL"):
        monkeypatch.delenv(name, raising=False)
    reset_map_cache()
    reset_settings()
    yield
    reset_map_cache()
    reset_settings()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def equidistant() -> CameraIntrinsics:
    """Equidistant fisheye, f=100 px, principal point (320, 240)."""
    return CameraIntrinsics(LensModel(LensKind.EQUIDISTANT, 100.0), (320.0, 240.0), (640, 480))


@pytest.fixture
def wide_fisheye() -> CameraIntrinsics:
    """Equidistant fisheye large enough to contain any 90 degree view around its axis."""
    return CameraIntrinsics(LensModel(LensKind.EQUIDISTANT, 300.0), (512.0, 512.0), (1024, 1024))


@pytest.fixture
def scene_config() -> SceneConfig:
    """One walker between the cameras, few frames, noiseless."""
    return SceneConfig.model_validate({
        "persons": [{"id": "p0", "start": [-0.3, -0.4], "end": [0.3, 0.4]}],
        "frames": 6,
    })


@pytest.fixture
def rig(scene_config):
    return build_rig(scene_config.rig)
