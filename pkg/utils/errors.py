"""Exception hierarchy for the fisheye pose toolkit.

Every error carries the process exit code the command line reports for it:
input and parse problems exit with 2, geometric and domain problems with 3.
"""

from __future__ import annotations

from utils.constants import EXIT_GEOMETRY_ERROR, EXIT_INPUT_ERROR, EXIT_UNEXPECTED


class FisheyePoseError(Exception):
    """Base class for all toolkit errors."""

    exit_code: int = EXIT_UNEXPECTED


class InputError(FisheyePoseError, ValueError):
    """Malformed or inconsistent input data."""

    exit_code = EXIT_INPUT_ERROR


class CalibrationError(InputError):
    """Calibration file could not be parsed or validated."""


class KeypointFileError(InputError):
    """Keypoint or skeleton file could not be parsed or validated."""


class SceneConfigError(InputError):
    """Synthetic scene configuration is invalid."""


class SizeMismatch(InputError):
    """Image dimensions do not match the lookup map's source dimensions."""


class PersonMismatch(InputError):
    """Two skeletons that should describe one person carry different ids."""


class GeometryError(FisheyePoseError):
    """A geometric operation has no valid result for its input."""

    exit_code = EXIT_GEOMETRY_ERROR


class DomainError(GeometryError):
    """Angle or radial distance lies outside a lens model's valid domain."""


class DegenerateInput(GeometryError):
    """Input cannot define a ray (e.g. zero-length object point)."""


class DegenerateGeometry(GeometryError):
    """Two-view configuration has no unique triangulation."""


class BehindCamera(GeometryError):
    """Triangulated point has non-positive depth in one of the views."""


class NotRectilinear(GeometryError):
    """Operation requires a rectilinear (pinhole) lens."""


class SingularPose(GeometryError):
    """World pose is not an invertible rigid transform."""


class OutputError(FisheyePoseError):
    """An output file or directory could not be written."""
