"""Motion-space algebra and perturbation samplers.

Composition follows the rigid-chain rule: applying motion ``a`` then ``b``
is one motion with rotation ``Ra @ Rb`` and translation ``Ra @ tb + ta``.
Gaussian smoothing draws and uniform attack grids both live here; draws are
counter-based (Philox keyed by seed/stream, counter = sample index) so a
given (seed, index) pair yields the same motion on any thread schedule.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .geometry import (
    MotionParams,
    axis_angle_from_rotation,
    rotation_from_axis_angle,
)

_UINT64_MAX = 2**64 - 1


class MotionAxis(enum.Enum):
    """The six 1-axis camera motions: translations along and rotations about
    the camera x (right), y (down), z (optical) axes."""

    TX = "Tx"
    TY = "Ty"
    TZ = "Tz"
    RX = "Rx"
    RY = "Ry"
    RZ = "Rz"

    @property
    def is_rotation(self) -> bool:
        return self.value.startswith("R")

    @property
    def unit_vector(self) -> np.ndarray:
        i = "xyz".index(self.value[1])
        e = np.zeros(3)
        e[i] = 1.0
        return e

    @classmethod
    def parse(cls, name: str) -> "MotionAxis":
        for axis in cls:
            if axis.value.lower() == name.strip().lower():
                return axis
        raise ValueError(f"unknown motion axis {name!r} (expected one of "
                         f"{[a.value for a in cls]})")


@dataclass(frozen=True)
class SmoothingSpec:
    """Per-coordinate standard deviations of the zero-mean Gaussian motion.

    Zero entries are never perturbed (exactly zero in every draw, not just
    tiny). A positive rotational sigma requires a unit ``fixed_axis``; the
    drawn rotation is then angle * fixed_axis with angle ~ N(0, sigma^2).
    """

    sigma_x: float = 0.0
    sigma_y: float = 0.0
    sigma_z: float = 0.0
    sigma_theta: float = 0.0
    fixed_axis: np.ndarray | None = None

    def __post_init__(self):
        for name in ("sigma_x", "sigma_y", "sigma_z", "sigma_theta"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {val}")
        axis = self.fixed_axis
        if axis is not None:
            axis = np.asarray(axis, dtype=np.float64).reshape(-1).copy()
            if axis.shape != (3,) or not np.all(np.isfinite(axis)):
                raise ValueError("fixed_axis must be a finite 3-vector")
            if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
                raise ValueError("fixed_axis must be a unit vector (|norm - 1| <= 1e-9)")
            axis.setflags(write=False)
            object.__setattr__(self, "fixed_axis", axis)
        elif self.sigma_theta > 0:
            raise ValueError("sigma_theta > 0 requires a fixed rotation axis")

    @classmethod
    def for_axis(cls, axis: MotionAxis, sigma: float) -> "SmoothingSpec":
        """1-axis smoothing: sigma on the given coordinate, zero elsewhere."""
        if axis.is_rotation:
            return cls(sigma_theta=sigma, fixed_axis=axis.unit_vector)
        return cls(**{f"sigma_{axis.value[1]}": sigma})

    def sigma_for(self, axis: MotionAxis) -> float:
        return self.sigma_theta if axis.is_rotation else getattr(
            self, f"sigma_{axis.value[1]}"
        )

    @property
    def translation_sigmas(self) -> np.ndarray:
        return np.array([self.sigma_x, self.sigma_y, self.sigma_z])


@dataclass(frozen=True)
class SeedSpec:
    """Root of a deterministic random stream.

    Distinct (master_seed, stream_id, sample index) triples map to
    independent Philox counter blocks, so Monte-Carlo results do not depend
    on how samples are scheduled across workers.
    """

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            val = getattr(self, name)
            if not (0 <= int(val) <= _UINT64_MAX):
                raise ValueError(f"{name} must be an unsigned 64-bit integer")

    def with_stream(self, stream_id: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, stream_id)

    def generator(self, index: int) -> np.random.Generator:
        """Generator for one sample index, independent of all others."""
        if index < 0:
            raise ValueError("sample index must be nonnegative")
        key = (int(self.master_seed) << 64) | int(self.stream_id)
        return np.random.Generator(
            np.random.Philox(key=key, counter=int(index) << 128)
        )


def compose(first: MotionParams, second: MotionParams) -> MotionParams:
    """Motion equivalent to applying ``first`` then ``second``.

    When both rotation vectors share an axis the angles add exactly (no
    round-trip through matrices), which keeps fixed-axis chains bit-stable.
    """
    r1, r2 = first.rotvec, second.rotvec
    n1, n2 = np.linalg.norm(r1), np.linalg.norm(r2)
    R1 = rotation_from_axis_angle(r1)
    translation = R1 @ second.translation + first.translation
    if n1 == 0.0 or n2 == 0.0 or np.linalg.norm(np.cross(r1, r2)) <= 1e-15 * n1 * n2:
        # parallel (or trivial) axes: signed angles are additive
        return MotionParams(r1 + r2, translation)
    R = R1 @ rotation_from_axis_angle(r2)
    return MotionParams(axis_angle_from_rotation(R), translation)


def inverse(motion: MotionParams) -> MotionParams:
    """Motion undoing ``motion``: compose(motion, inverse(motion)) = identity."""
    Rinv = rotation_from_axis_angle(motion.rotvec).T
    return MotionParams(-motion.rotvec, -(Rinv @ motion.translation))


def axis_motion(axis: MotionAxis, value: float) -> MotionParams:
    """1-axis motion with the given signed magnitude (meters or radians)."""
    if not np.isfinite(value):
        raise ValueError(f"axis motion value must be finite, got {value}")
    rotvec = np.zeros(3)
    translation = np.zeros(3)
    i = "xyz".index(axis.value[1])
    if axis.is_rotation:
        rotvec[i] = value
    else:
        translation[i] = value
    return MotionParams(rotvec, translation)


def sample_gaussian(spec: SmoothingSpec, seed: SeedSpec, index: int) -> MotionParams:
    """One zero-mean Gaussian motion draw, deterministic in (seed, index).

    Four standard normals are always consumed (tx, ty, tz, angle) so the
    stream layout does not depend on which sigmas are zero; zero sigmas
    yield exactly-zero coordinates.
    """
    z = seed.generator(index).standard_normal(4)
    translation = spec.translation_sigmas * z[:3]
    if spec.fixed_axis is not None and spec.sigma_theta > 0.0:
        rotvec = (spec.sigma_theta * z[3]) * spec.fixed_axis
    else:
        rotvec = np.zeros(3)
    return MotionParams(rotvec, translation)


def sample_uniform_grid(
    axis: MotionAxis, radius: float, k: int, *, seed: SeedSpec | None = None
) -> list[MotionParams]:
    """k motions on the given axis, evenly spaced over [-radius, +radius]
    with both endpoints included.

    With ``seed`` given, returns k independent uniform draws from the same
    interval instead of the deterministic grid.
    """
    if k < 1:
        raise ValueError(f"grid size must be >= 1, got {k}")
    if not (np.isfinite(radius) and radius >= 0):
        raise ValueError(f"radius must be finite and >= 0, got {radius}")
    if seed is not None:
        values = [
            float(seed.generator(i).uniform(-radius, radius)) for i in range(k)
        ]
    elif k == 1:
        values = [0.0]
    else:
        values = np.linspace(-radius, radius, k).tolist()
    return [axis_motion(axis, v) for v in values]
