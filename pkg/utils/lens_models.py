"""Radially symmetric lens models.

Implements the five classic projection functions mapping the inclination angle
theta of an incoming ray to the radial distance r_d of its image from the
principal point, together with their algebraic inverses:

    rectilinear    r_d = f tan(theta)
    equidistant    r_d = f theta
    stereographic  r_d = 2 f tan(theta / 2)
    equisolid      r_d = 2 f sin(theta / 2)
    orthographic   r_d = f sin(theta)

All functions accept scalars or numpy arrays. The checked operations raise
DomainError for any out-of-domain element; the ``*_in_domain`` helpers return
boolean masks instead so whole pixel grids can be processed without raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .constants import RECTILINEAR_THETA_MARGIN
from .errors import DomainError


class LensKind(str, Enum):
    """Classic projection functions; serialized as lowercase strings."""

    RECTILINEAR = "rectilinear"
    EQUIDISTANT = "equidistant"
    STEREOGRAPHIC = "stereographic"
    EQUISOLID = "equisolid"
    ORTHOGRAPHIC = "orthographic"


# Upper bound of theta per kind; tangent and sine lose injectivity past pi/2.
# The rectilinear bound is itself in the domain, the others are exclusive.
_THETA_LIMITS: dict[LensKind, float] = {
    LensKind.RECTILINEAR: math.pi / 2.0 - RECTILINEAR_THETA_MARGIN,
    LensKind.EQUIDISTANT: math.pi,
    LensKind.STEREOGRAPHIC: math.pi,
    LensKind.EQUISOLID: math.pi,
    LensKind.ORTHOGRAPHIC: math.pi / 2.0,
}
_CLOSED_LIMITS: frozenset[LensKind] = frozenset({LensKind.RECTILINEAR})


def _forward_unit(kind: LensKind, theta: NDArray[np.float64]) -> NDArray[np.float64]:
    """r_d / f without domain checks."""
    if kind is LensKind.RECTILINEAR:
        return np.tan(theta)
    if kind is LensKind.EQUIDISTANT:
        return theta.copy()
    if kind is LensKind.STEREOGRAPHIC:
        return 2.0 * np.tan(0.5 * theta)
    if kind is LensKind.EQUISOLID:
        return 2.0 * np.sin(0.5 * theta)
    return np.sin(theta)


def _inverse_unit(kind: LensKind, rho: NDArray[np.float64]) -> NDArray[np.float64]:
    """Theta for r_d / f without domain checks."""
    if kind is LensKind.RECTILINEAR:
        return np.arctan(rho)
    if kind is LensKind.EQUIDISTANT:
        return rho.copy()
    if kind is LensKind.STEREOGRAPHIC:
        return 2.0 * np.arctan(0.5 * rho)
    if kind is LensKind.EQUISOLID:
        return 2.0 * np.arcsin(np.clip(0.5 * rho, 0.0, 1.0))
    return np.arcsin(np.clip(rho, 0.0, 1.0))


@dataclass(frozen=True)
class LensModel:
    """A lens kind together with its focal length in pixels."""

    kind: LensKind
    focal_length: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", LensKind(self.kind))
        if not math.isfinite(self.focal_length) or self.focal_length <= 0.0:
            msg = f"focal_length must be positive and finite, got {self.focal_length}"
            raise DomainError(msg)

    @property
    def max_theta(self) -> float:
        """Upper bound of the valid inclination domain (radians); see ``closed_domain``."""
        return _THETA_LIMITS[self.kind]

    @property
    def closed_domain(self) -> bool:
        """Whether ``max_theta`` and ``max_rd`` themselves lie inside the domain."""
        return self.kind in _CLOSED_LIMITS

    @property
    def max_rd(self) -> float:
        """Upper bound of representable radial distances (pixels)."""
        limit = np.asarray(self.max_theta, dtype=np.float64)
        return float(self.focal_length * _forward_unit(self.kind, limit))

    def theta_in_domain(self, theta: ArrayLike) -> NDArray[np.bool_]:
        values = np.asarray(theta, dtype=np.float64)
        below = values <= self.max_theta if self.closed_domain else values < self.max_theta
        return np.isfinite(values) & (values >= 0.0) & below

    def rd_in_domain(self, rd: ArrayLike) -> NDArray[np.bool_]:
        values = np.asarray(rd, dtype=np.float64)
        below = values <= self.max_rd if self.closed_domain else values < self.max_rd
        return np.isfinite(values) & (values >= 0.0) & below

    def forward(self, theta: ArrayLike) -> NDArray[np.float64]:
        """Unchecked r_d(theta); callers mask the domain themselves."""
        values = np.asarray(theta, dtype=np.float64)
        return self.focal_length * _forward_unit(self.kind, values)

    def inverse(self, rd: ArrayLike) -> NDArray[np.float64]:
        """Unchecked theta(r_d); callers mask the domain themselves."""
        values = np.asarray(rd, dtype=np.float64)
        return _inverse_unit(self.kind, values / self.focal_length)


def _close(model: LensModel) -> str:
    return "]" if model.closed_domain else ")"


def _scalar_or_array(values: NDArray[np.float64]) -> float | NDArray[np.float64]:
    return float(values) if values.ndim == 0 else values


def theta_to_rd(model: LensModel, theta: ArrayLike) -> float | NDArray[np.float64]:
    """Project an inclination angle to a radial image distance.

    Args:
        model: Lens model.
        theta: Inclination angle(s) in radians, up to model.max_theta (inclusive for rectilinear lenses).

    Returns:
        Radial distance(s) in pixels.

    Raises:
        DomainError: If any angle is negative, non-finite or beyond the domain.

    """
    values = np.asarray(theta, dtype=np.float64)
    if not np.all(model.theta_in_domain(values)):
        msg = (
            f"theta outside [0, {model.max_theta:.12g}{_close(model)} for {model.kind.value} lens: "
            f"{values[~model.theta_in_domain(values)].ravel()[:3].tolist()}"
        )
        raise DomainError(msg)
    return _scalar_or_array(model.forward(values))


def rd_to_theta(model: LensModel, rd: ArrayLike) -> float | NDArray[np.float64]:
    """Invert theta_to_rd algebraically.

    Raises:
        DomainError: If any radial distance is negative or not representable.

    """
    values = np.asarray(rd, dtype=np.float64)
    if not np.all(model.rd_in_domain(values)):
        msg = (
            f"radial distance outside [0, {model.max_rd:.12g}{_close(model)} for {model.kind.value} lens: "
            f"{values[~model.rd_in_domain(values)].ravel()[:3].tolist()}"
        )
        raise DomainError(msg)
    return _scalar_or_array(model.inverse(values))


def field_of_view(model: LensModel, radius: float) -> float:
    """Full field of view (radians) covered by an image circle of ``radius`` pixels."""
    if radius >= model.max_rd:
        return 2.0 * model.max_theta
    return 2.0 * float(rd_to_theta(model, radius))


def sample_curves(
    kinds: tuple[LensKind, ...] | list[LensKind], theta: ArrayLike,
) -> dict[LensKind, NDArray[np.float64]]:
    """Sample r_d / f for each kind; out-of-domain samples are NaN."""
    values = np.asarray(theta, dtype=np.float64)
    curves: dict[LensKind, NDArray[np.float64]] = {}
    for kind in kinds:
        unit = LensModel(kind, 1.0)
        samples = unit.forward(np.where(unit.theta_in_domain(values), values, 0.0))
        curves[kind] = np.where(unit.theta_in_domain(values), samples, np.nan)
    return curves
