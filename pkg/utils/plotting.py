"""SVG figures: lens projection curves and per-person limb length box plots.

Plots are presentation only; nothing numeric is derived from them.
"""

from __future__ import annotations

import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.ticker import FuncFormatter, MultipleLocator  # noqa: E402

from .lens_models import LensKind, sample_curves  # noqa: E402
from .skeleton import PersonStats  # noqa: E402

_CURVE_LABELS = {
    LensKind.RECTILINEAR: r"rectilinear: $f\tan\theta$",
    LensKind.EQUIDISTANT: r"equidistant: $f\theta$",
    LensKind.STEREOGRAPHIC: r"stereographic: $2f\tan(\theta/2)$",
    LensKind.EQUISOLID: r"equisolid: $2f\sin(\theta/2)$",
    LensKind.ORTHOGRAPHIC: r"orthographic: $f\sin\theta$",
}


def _degrees(x: float, _pos: int) -> str:
    return f"{np.degrees(x):.0f}°"


def plot_lens_curves(path: str | os.PathLike[str], theta: np.ndarray) -> None:
    """Plot r_d / f against theta for the five projection functions."""
    curves = sample_curves(list(LensKind), theta)
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for kind, values in curves.items():
        ax.plot(theta, values, label=_CURVE_LABELS[kind])
    ax.set_xlim(0.0, float(theta[-1]))
    ax.set_ylim(0.0, 4.0)
    ax.xaxis.set_major_locator(MultipleLocator(np.pi / 6))
    ax.xaxis.set_major_formatter(FuncFormatter(_degrees))
    ax.set_xlabel(r"inclination $\theta$")
    ax.set_ylabel(r"$r_d / f$")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper left", fontsize="small")
    _save(fig, path)


def plot_limb_boxes(path: str | os.PathLike[str], persons: list[PersonStats]) -> None:
    """Box plot per limb per person built from precomputed quartiles; whiskers span min..max."""
    rows = max(len(persons), 1)
    fig, axes = plt.subplots(rows, 1, figsize=(9.0, 3.0 * rows), squeeze=False)
    for ax, person in zip(axes[:, 0], persons, strict=False):
        boxes = [
            {
                "label": str(limb.limb),
                "whislo": limb.min,
                "q1": limb.q1,
                "med": limb.median,
                "q3": limb.q3,
                "whishi": limb.max,
                "fliers": [],
            }
            for limb in person.limbs
            if limb.count > 0
        ]
        if boxes:
            ax.bxp(boxes, showfliers=False)
        ax.set_title(f"{person.person_id} ({person.frames} frames)")
        ax.set_xlabel("limb")
        ax.set_ylabel("length (m)")
        ax.grid(True, axis="y", alpha=0.3)
    _save(fig, path)


def _save(fig: plt.Figure, path: str | os.PathLike[str]) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(target, format="svg")
    plt.close(fig)
