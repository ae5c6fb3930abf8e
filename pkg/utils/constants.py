"""Project-wide constants for the fisheye pose toolkit."""

# Status field of --json output
SUCCESS_STATUS: str = "SUCCESS"
ERROR_STATUS: str = "ERROR"

# Process exit codes
EXIT_OK: int = 0
EXIT_UNEXPECTED: int = 1
EXIT_INPUT_ERROR: int = 2
EXIT_GEOMETRY_ERROR: int = 3

# Rectilinear lenses stop this far short of 90 degrees to keep r_d finite
RECTILINEAR_THETA_MARGIN: float = 1e-9

# Virtual view defaults (degrees / pixels)
DEFAULT_VIEW_FOV: float = 90.0
DEFAULT_VIEW_SIZE: int = 640

# Value written to destination pixels whose ray misses the source image
DEFAULT_FILL: int = 0
INTERPOLATION_MODES: tuple[str, ...] = ("bilinear", "nearest")
DEFAULT_INTERPOLATION: str = "bilinear"

# Lookup map cache: rotations are quantized to this step (radians) for keying
MAP_CACHE_ROTATION_STEP: float = 1e-6
# Lookup maps kept in memory; the least recently used is evicted first
MAP_CACHE_CAPACITY: int = 32
LOOKUP_MAP_MAGIC: bytes = b"FLKM"
LOOKUP_MAP_SUFFIX: str = ".flkm"

# Tolerances for validating rotations and rigid poses
ROTATION_TOLERANCE: float = 1e-9

# Triangulation degeneracy thresholds
DEGENERATE_SINGULAR_RATIO: float = 1.0 - 1e-9
RANK_DEFICIENCY_RATIO: float = 1e-12
CAMERA_CENTER_TOLERANCE: float = 1e-12

# Reconstruction thresholds
DEFAULT_MIN_CONF: float = 0.3
DEFAULT_MAX_RESIDUAL: float = 5.0

# Gravity in the world frame when a calibration omits it
DEFAULT_GRAVITY: tuple[float, float, float] = (0.0, 0.0, -1.0)

# Rings splitting the lens half field of view for accuracy reports
RING_NAMES: tuple[str, ...] = ("central", "outer", "edge")

# Lens curve plot defaults
CURVE_MAX_DEGREES: float = 180.0
CURVE_SAMPLES: int = 512

