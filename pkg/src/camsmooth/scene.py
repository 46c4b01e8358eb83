"""Procedural desk-scale scenes and camera pose sampling.

A scene is a closed room shell (floor, ceiling, four walls), a pedestal
column in the middle, and one class-determining object sitting on the
pedestal. Every surface is sampled at a fixed spacing, so clouds are dense
and label identity is carried by the object's shape (and palette color).

Poses look at the scene center from a spherical shell, z-up world frame,
parameterized by (yaw, pitch, roll, radius). Test poses use fixed pitch and
roll with evenly spaced yaws; train poses are rejection-sampled so that
every train/test pair differs by at least a configured gap in yaw AND pitch
AND roll simultaneously.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import MotionParams, axis_angle_from_rotation
from .pointcloud import ColoredPointCloud


class PointBudgetError(ValueError):
    """The requested sampling density would exceed the configured point budget."""


class PoseGapInfeasibleError(RuntimeError):
    """Rejection sampling could not find poses honoring the angular gap."""


class ShapeKind(enum.Enum):
    SPHERE = "sphere"
    BOX = "box"
    CYLINDER = "cylinder"
    CONE = "cone"
    TORUS = "torus"


# label set: shape + palette color per class, in class-id order
CLASS_SHAPES = [
    ShapeKind.SPHERE,
    ShapeKind.BOX,
    ShapeKind.CYLINDER,
    ShapeKind.CONE,
    ShapeKind.TORUS,
]
CLASS_COLORS = [
    (0.85, 0.15, 0.15),
    (0.15, 0.60, 0.85),
    (0.20, 0.75, 0.25),
    (0.90, 0.75, 0.10),
    (0.70, 0.25, 0.80),
]

_FLOOR_COLOR = (0.45, 0.42, 0.40)
_CEILING_COLOR = (0.88, 0.88, 0.90)
_WALL_COLORS = [
    (0.75, 0.72, 0.70),
    (0.70, 0.75, 0.72),
    (0.72, 0.70, 0.75),
    (0.74, 0.74, 0.68),
]
_PEDESTAL_COLOR = (0.55, 0.40, 0.30)


@dataclass(frozen=True)
class SceneSpec:
    """Parameters of one labeled scene."""

    class_id: int
    shape: ShapeKind
    object_color: tuple[float, float, float]
    room_half_extent: float = 0.6
    point_density: float = 0.02
    rng_seed: int = 0
    point_budget: int = 5_000_000

    def __post_init__(self):
        if not (np.isfinite(self.point_density) and self.point_density > 0):
            raise ValueError(f"point density must be > 0, got {self.point_density}")
        if self.room_half_extent <= self.object_radius:
            raise ValueError("room must be larger than the object it contains")
        if self.point_budget < 1:
            raise ValueError("point budget must be positive")

    @property
    def object_radius(self) -> float:
        """Characteristic radius of the class object (scales with the room).

        Sized so the object roughly fills the default camera's narrow view
        cone from the default shell distance.
        """
        return 0.0625 * self.room_half_extent

    @classmethod
    def for_class(cls, class_id: int, **overrides) -> "SceneSpec":
        if not 0 <= class_id < len(CLASS_SHAPES):
            raise ValueError(f"class_id must be in [0, {len(CLASS_SHAPES)}), got {class_id}")
        return cls(
            class_id=class_id,
            shape=CLASS_SHAPES[class_id],
            object_color=CLASS_COLORS[class_id],
            **overrides,
        )


@dataclass(frozen=True)
class PoseSample:
    """A camera pose (look-at scene center) with its generating angles."""

    pose: MotionParams
    split: str
    yaw_deg: float
    pitch_deg: float
    roll_deg: float
    radius_m: float


# ---------------------------------------------------------------------------
# surface samplers; each returns (n, 3) positions


def _grid_1d(lo: float, hi: float, spacing: float, offset: float) -> np.ndarray:
    start = lo + (offset % spacing)
    n = int(math.floor((hi - start) / spacing)) + 1 if hi >= start else 0
    return start + spacing * np.arange(max(n, 0))


def _plane(axis: int, level: float, half: float, spacing: float, rng) -> np.ndarray:
    a = _grid_1d(-half, half, spacing, rng.uniform(0, spacing))
    b = _grid_1d(-half, half, spacing, rng.uniform(0, spacing))
    A, B = np.meshgrid(a, b, indexing="ij")
    flat = np.empty((A.size, 3))
    others = [i for i in range(3) if i != axis]
    flat[:, others[0]] = A.ravel()
    flat[:, others[1]] = B.ravel()
    flat[:, axis] = level
    return flat


def _fibonacci_sphere(radius: float, spacing: float, rng) -> np.ndarray:
    n = max(1, round(4.0 * math.pi * radius**2 / spacing**2))
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = math.pi * (1.0 + math.sqrt(5.0)) * i + rng.uniform(0, 2 * math.pi)
    r_xy = np.sqrt(np.clip(1.0 - z**2, 0.0, 1.0))
    return radius * np.stack([r_xy * np.cos(phi), r_xy * np.sin(phi), z], axis=1)


def _box_surface(half: np.ndarray, spacing: float, rng) -> np.ndarray:
    faces = []
    for axis in range(3):
        others = [i for i in range(3) if i != axis]
        a = _grid_1d(-half[others[0]], half[others[0]], spacing, rng.uniform(0, spacing))
        b = _grid_1d(-half[others[1]], half[others[1]], spacing, rng.uniform(0, spacing))
        A, B = np.meshgrid(a, b, indexing="ij")
        for sign in (-1.0, 1.0):
            face = np.empty((A.size, 3))
            face[:, others[0]] = A.ravel()
            face[:, others[1]] = B.ravel()
            face[:, axis] = sign * half[axis]
            faces.append(face)
    return np.concatenate(faces, axis=0)


def _disk(radius: float, z: float, spacing: float, rng) -> np.ndarray:
    rings = [np.array([[0.0, 0.0, z]])]
    n_rings = max(1, int(round(radius / spacing)))
    for j in range(1, n_rings + 1):
        r = radius * j / n_rings
        m = max(1, int(round(2 * math.pi * r / spacing)))
        ang = 2 * math.pi * np.arange(m) / m + rng.uniform(0, 2 * math.pi)
        rings.append(np.stack([r * np.cos(ang), r * np.sin(ang), np.full(m, z)], axis=1))
    return np.concatenate(rings, axis=0)


def _cylinder_side(radius: float, z0: float, z1: float, spacing: float, rng) -> np.ndarray:
    m = max(1, int(round(2 * math.pi * radius / spacing)))
    heights = _grid_1d(z0, z1, spacing, rng.uniform(0, spacing))
    ang = 2 * math.pi * np.arange(m) / m + rng.uniform(0, 2 * math.pi)
    A, H = np.meshgrid(ang, heights, indexing="ij")
    return np.stack(
        [radius * np.cos(A).ravel(), radius * np.sin(A).ravel(), H.ravel()], axis=1
    )


def _cone_side(radius: float, height: float, spacing: float, rng) -> np.ndarray:
    slant = math.hypot(radius, height)
    n_rows = max(1, int(round(slant / spacing)))
    rows = []
    phase = rng.uniform(0, 2 * math.pi)
    for j in range(n_rows + 1):
        frac = j / n_rows  # 0 at base, 1 at apex
        r = radius * (1.0 - frac)
        z = height * frac
        m = max(1, int(round(2 * math.pi * r / spacing)))
        ang = 2 * math.pi * np.arange(m) / m + phase
        rows.append(np.stack([r * np.cos(ang), r * np.sin(ang), np.full(m, z)], axis=1))
    return np.concatenate(rows, axis=0)


def _torus(major: float, minor: float, spacing: float, rng) -> np.ndarray:
    n_u = max(3, int(round(2 * math.pi * major / spacing)))
    n_v = max(3, int(round(2 * math.pi * minor / spacing)))
    u = 2 * math.pi * np.arange(n_u) / n_u + rng.uniform(0, 2 * math.pi)
    v = 2 * math.pi * np.arange(n_v) / n_v + rng.uniform(0, 2 * math.pi)
    U, V = np.meshgrid(u, v, indexing="ij")
    ring = major + minor * np.cos(V)
    return np.stack(
        [ring * np.cos(U), ring * np.sin(U), minor * np.sin(V)], axis=1
    ).reshape(-1, 3)


def _object_points(spec: SceneSpec, rng) -> tuple[np.ndarray, float]:
    """Class object surface centered at the origin (the look-at target).

    Returns (points, bottom_z) where bottom_z is the object's lowest point,
    i.e. where the pedestal must reach.
    """
    r = spec.object_radius
    d = spec.point_density
    if spec.shape is ShapeKind.SPHERE:
        pts = _fibonacci_sphere(r, d, rng)
        bottom = -r
    elif spec.shape is ShapeKind.BOX:
        half = np.array([r, 0.75 * r, 0.55 * r])
        pts = _box_surface(half, d, rng)
        bottom = -half[2]
    elif spec.shape is ShapeKind.CYLINDER:
        rad, half_h = 0.7 * r, 0.85 * r
        pts = np.concatenate([
            _cylinder_side(rad, -half_h, half_h, d, rng),
            _disk(rad, -half_h, d, rng),
            _disk(rad, half_h, d, rng),
        ])
        bottom = -half_h
    elif spec.shape is ShapeKind.CONE:
        rad, height, base_z = 0.95 * r, 2.0 * r, -0.75 * r
        pts = np.concatenate([
            _cone_side(rad, height, d, rng) + np.array([0.0, 0.0, base_z]),
            _disk(rad, base_z, d, rng),
        ])
        bottom = base_z
    elif spec.shape is ShapeKind.TORUS:
        major, minor = 0.75 * r, 0.35 * r
        pts = _torus(major, minor, d, rng)
        bottom = -minor
    else:  # pragma: no cover
        raise ValueError(f"unhandled shape {spec.shape}")
    return pts, bottom


def generate_scene(spec: SceneSpec) -> ColoredPointCloud:
    """Sample the full labeled scene as one colored cloud.

    Deterministic in ``spec.rng_seed``. Raises PointBudgetError when the
    density implies more points than ``spec.point_budget``.
    """
    h = spec.room_half_extent
    d = spec.point_density
    # cheap upper bound on the point count before any allocation
    room_area = 6 * (2 * h) ** 2
    object_area = 6 * 4 * math.pi * spec.object_radius**2
    pedestal_area = 6 * (2 * 0.12 * h) * h
    estimate = (room_area + object_area + pedestal_area) / d**2 + 1000
    if estimate > spec.point_budget:
        raise PointBudgetError(
            f"density {d} m implies ~{estimate:.0f} points, over the budget "
            f"of {spec.point_budget}"
        )
    rng = np.random.default_rng(spec.rng_seed)
    parts, colors = [], []

    def add(points: np.ndarray, color) -> None:
        parts.append(points)
        colors.append(np.tile(np.asarray(color, dtype=np.float64), (len(points), 1)))

    add(_plane(2, -h, h, d, rng), _FLOOR_COLOR)
    add(_plane(2, +h, h, d, rng), _CEILING_COLOR)
    add(_plane(0, -h, h, d, rng), _WALL_COLORS[0])
    add(_plane(0, +h, h, d, rng), _WALL_COLORS[1])
    add(_plane(1, -h, h, d, rng), _WALL_COLORS[2])
    add(_plane(1, +h, h, d, rng), _WALL_COLORS[3])

    obj_points, obj_bottom = _object_points(spec, rng)

    # pedestal column from the floor up to the object's underside
    ped_half = np.array([0.1 * h, 0.1 * h, (obj_bottom + h) / 2.0])
    pedestal = _box_surface(ped_half, d, rng)
    pedestal[:, 2] += (obj_bottom - h) / 2.0
    add(pedestal, _PEDESTAL_COLOR)

    add(obj_points, spec.object_color)

    cloud = ColoredPointCloud(np.concatenate(parts), np.concatenate(colors))
    if len(cloud) > spec.point_budget:
        raise PointBudgetError(
            f"generated {len(cloud)} points, over the budget of {spec.point_budget}"
        )
    return cloud


# ---------------------------------------------------------------------------
# pose sampling

_WORLD_DOWN = np.array([0.0, 0.0, -1.0])

TEST_PITCH_DEG = 10.0
TEST_ROLL_DEG = 0.0
TRAIN_PITCH_RANGE_DEG = (0.0, 60.0)
TRAIN_ROLL_RANGE_DEG = (-60.0, 60.0)
DEFAULT_SHELL_RADIUS_FACTOR = 0.75  # camera distance as a fraction of room half extent
TRAIN_RADIUS_JITTER = 0.08  # +- fraction of the shell radius
_REJECTION_BUDGET = 1_000_000


def look_at_pose(
    yaw_deg: float, pitch_deg: float, roll_deg: float, radius_m: float
) -> MotionParams:
    """Camera at spherical (yaw, pitch, radius) looking at the origin.

    Camera axes: z toward the origin, x rightward, y downward (so that the
    floor appears at the bottom of the image); roll turns about the optical
    axis after the look-at alignment.
    """
    yaw, pitch, roll = np.deg2rad([yaw_deg, pitch_deg, roll_deg])
    position = radius_m * np.array(
        [math.cos(pitch) * math.cos(yaw), math.cos(pitch) * math.sin(yaw), math.sin(pitch)]
    )
    z_cam = -position / np.linalg.norm(position)
    x_cam = np.cross(_WORLD_DOWN, z_cam)
    nx = np.linalg.norm(x_cam)
    if nx < 1e-9:
        raise ValueError("pose looks straight up or down; roll is undefined")
    x_cam /= nx
    y_cam = np.cross(z_cam, x_cam)
    R = np.stack([x_cam, y_cam, z_cam], axis=1)
    cr, sr = math.cos(roll), math.sin(roll)
    R = R @ np.array([[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]])
    return MotionParams(axis_angle_from_rotation(R), position)


def _circular_gap_deg(a: float, b: float) -> float:
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


def pose_angle_gap_ok(
    yaw: float, pitch: float, roll: float, references: list[PoseSample], gap_deg: float
) -> bool:
    """True when (yaw, pitch, roll) is at least gap_deg from every reference
    pose in yaw (circular), pitch, and roll simultaneously."""
    for ref in references:
        if (
            _circular_gap_deg(yaw, ref.yaw_deg) < gap_deg
            or abs(pitch - ref.pitch_deg) < gap_deg
            or abs(roll - ref.roll_deg) < gap_deg
        ):
            return False
    return True


def sample_poses(
    split: str,
    count: int,
    gap_degrees: float,
    rng_seed: int,
    *,
    shell_radius: float = DEFAULT_SHELL_RADIUS_FACTOR * 0.6,
    reference: list[PoseSample] | None = None,
) -> list[PoseSample]:
    """Sample camera poses for one split.

    Test poses sit on the shell at evenly spaced yaws with fixed pitch and
    roll. Train poses draw (yaw, pitch, roll, radius) uniformly from the
    training ranges and are rejected until the angular gap to every
    ``reference`` test pose holds; ``reference`` is required for the train
    split whenever gap_degrees > 0.
    """
    if count < 1:
        raise ValueError(f"pose count must be >= 1, got {count}")
    if gap_degrees < 0:
        raise ValueError(f"gap must be >= 0, got {gap_degrees}")
    if split == "test":
        yaws = 360.0 * np.arange(count) / count
        return [
            PoseSample(
                pose=look_at_pose(y, TEST_PITCH_DEG, TEST_ROLL_DEG, shell_radius),
                split="test",
                yaw_deg=float(y),
                pitch_deg=TEST_PITCH_DEG,
                roll_deg=TEST_ROLL_DEG,
                radius_m=shell_radius,
            )
            for y in yaws
        ]
    if split != "train":
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")
    if gap_degrees > 0 and reference is None:
        raise ValueError("train sampling with a gap needs the test poses as reference")
    reference = reference or []
    rng = np.random.default_rng(rng_seed)
    out: list[PoseSample] = []
    attempts = 0
    while len(out) < count:
        if attempts >= _REJECTION_BUDGET:
            raise PoseGapInfeasibleError(
                f"gave up after {attempts} draws: gap of {gap_degrees} deg to "
                f"{len(reference)} test poses looks infeasible"
            )
        attempts += 1
        yaw = rng.uniform(0.0, 360.0)
        pitch = rng.uniform(*TRAIN_PITCH_RANGE_DEG)
        roll = rng.uniform(*TRAIN_ROLL_RANGE_DEG)
        radius = shell_radius * (1.0 + rng.uniform(-TRAIN_RADIUS_JITTER, TRAIN_RADIUS_JITTER))
        if not pose_angle_gap_ok(yaw, pitch, roll, reference, gap_degrees):
            continue
        out.append(
            PoseSample(
                pose=look_at_pose(yaw, pitch, roll, radius),
                split="train",
                yaw_deg=yaw,
                pitch_deg=pitch,
                roll_deg=roll,
                radius_m=radius,
            )
        )
    return out
