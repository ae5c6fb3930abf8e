"""Command plotting r_d / f against inclination for the five projection functions."""

from __future__ import annotations

from typing import Any

import numpy as np

from tools.base import Command, CommandResult, option
from utils.constants import CURVE_MAX_DEGREES, CURVE_SAMPLES
from utils.errors import InputError
from utils.lens_models import LensKind, LensModel
from utils.logger import get_logger
from utils.plotting import plot_lens_curves

logger = get_logger(__name__)


class LensCurvesCommand(Command):
    action = "plot lens curves"

    def run(self, params: dict[str, Any]) -> CommandResult:
        out_path = params.get("out")
        max_deg = float(option(params, "max_deg", CURVE_MAX_DEGREES))
        samples = int(option(params, "samples", CURVE_SAMPLES))

        if not 0.0 < max_deg <= CURVE_MAX_DEGREES:
            msg = f"--max-deg must be in (0, {CURVE_MAX_DEGREES}], got {max_deg}"
            raise InputError(msg)
        if samples < 2:
            msg = f"--samples must be at least 2, got {samples}"
            raise InputError(msg)
        theta = np.linspace(0.0, np.radians(max_deg), samples)
        plot_lens_curves(out_path, theta)

        limits = {kind.value: float(np.degrees(LensModel(kind, 1.0).max_theta)) for kind in LensKind}
        logger.info("Lens curves written (samples: %d, max_deg: %.1f, out: %s)", samples, max_deg, out_path)
        return CommandResult(
            {"out": str(out_path), "samples": samples, "max_deg": max_deg, "max_theta_deg": limits},
            [f"Wrote {out_path}"],
        )
