"""Pinhole camera model and axis-angle rigid motions.

Conventions
-----------
A camera motion ``(rotvec, translation)`` displaces the camera inside its
current frame: the camera rotates by ``R = exp(rotvec^)`` and moves by
``translation``. A static point with coordinates ``P`` in the pre-motion
camera frame therefore has post-motion coordinates ``R^-1 (P - t)``, and its
depth is the third component of that vector. Pixel coordinates are
``u = fx * X/Z + cx`` (column) and ``v = fy * Y/Z + cy`` (row), i.e. the
camera looks down +z with x right and y down.

All functions are pure; arrays are treated as immutable inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Points closer than this to the image plane count as behind the camera.
DEPTH_EPSILON = 1e-6

# Below this rotation angle the Rodrigues formula switches to its 2nd-order
# Taylor expansion, which needs no division by the angle.
SMALL_ANGLE = 1e-6


class BehindCameraError(ValueError):
    """Projection of a point with depth <= DEPTH_EPSILON was requested."""


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics and the pixel-grid size they project onto."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("image grid must be at least 1x1")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image grid")

    @property
    def matrix(self) -> np.ndarray:
        """3x3 intrinsic matrix [[fx,0,cx],[0,fy,cy],[0,0,1]]."""
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )


def _as_vec3(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {np.shape(v)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {arr}")
    return arr


@dataclass(frozen=True, eq=False)
class MotionParams:
    """6-DoF camera motion: axis-angle rotation vector plus translation.

    The rotation angle is the Euclidean norm of ``rotvec``; construction
    canonicalizes it into [0, pi] (a norm above pi maps to the equivalent
    opposite-axis representation). The all-zero motion is the identity.
    """

    rotvec: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rv = _as_vec3(self.rotvec, "rotvec").copy()
        tr = _as_vec3(self.translation, "translation").copy()
        angle = float(np.linalg.norm(rv))
        if angle > math.pi:
            # wrap to (-pi, pi] along the same axis, then flip if negative
            wrapped = math.remainder(angle, 2.0 * math.pi)
            rv = rv * (wrapped / angle)
        rv.setflags(write=False)
        tr.setflags(write=False)
        object.__setattr__(self, "rotvec", rv)
        object.__setattr__(self, "translation", tr)

    @classmethod
    def identity(cls) -> "MotionParams":
        return cls(np.zeros(3), np.zeros(3))

    @property
    def angle(self) -> float:
        """Rotation angle in radians (norm of the rotation vector)."""
        return float(np.linalg.norm(self.rotvec))

    def is_identity(self, tol: float = 0.0) -> bool:
        return (
            float(np.abs(self.rotvec).max(initial=0.0)) <= tol
            and float(np.abs(self.translation).max(initial=0.0)) <= tol
        )

    def __repr__(self):
        return f"MotionParams(rotvec={self.rotvec.tolist()}, translation={self.translation.tolist()})"


# 3D points are plain float64 arrays of shape (3,); batches are (n, 3).
Point3 = np.ndarray


def _skew(v: np.ndarray) -> np.ndarray:
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def rotation_from_axis_angle(rotvec) -> np.ndarray:
    """Rodrigues map from a rotation vector to a 3x3 rotation matrix.

    For angles below SMALL_ANGLE the 2nd-order Taylor expansion
    ``I + K + K^2/2`` is used (error O(theta^3)), so the zero vector maps
    exactly to the identity and no division by the angle ever happens.
    """
    rv = _as_vec3(rotvec, "rotvec")
    theta = float(np.linalg.norm(rv))
    if theta < SMALL_ANGLE:
        K = _skew(rv)
        return np.eye(3) + K + 0.5 * (K @ K)
    axis = rv / theta
    K = _skew(axis)
    return np.eye(3) + math.sin(theta) * K + (1.0 - math.cos(theta)) * (K @ K)


def axis_angle_from_rotation(R) -> np.ndarray:
    """Log map from a rotation matrix to a rotation vector with angle in [0, pi]."""
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3):
        raise ValueError(f"rotation matrix must be 3x3, got {R.shape}")
    if not np.all(np.isfinite(R)):
        raise ValueError("rotation matrix must be finite")
    trace = float(np.trace(R))
    cos_theta = max(-1.0, min(1.0, (trace - 1.0) / 2.0))
    theta = math.acos(cos_theta)
    # off-diagonal antisymmetric part carries axis * sin(theta)
    w = 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if theta < SMALL_ANGLE:
        # sin(theta)/theta ~ 1 here, so w is the rotation vector itself
        return w
    if math.pi - theta < 1e-6:
        # near pi, sin(theta) ~ 0; recover the axis from R + I instead
        A = R + np.eye(3)
        col = int(np.argmax(np.diag(A)))
        axis = A[:, col] / np.linalg.norm(A[:, col])
        # fix the sign from the antisymmetric part when it is not fully degenerate
        if np.dot(axis, w) < 0:
            axis = -axis
        return theta * axis
    return (theta / math.sin(theta)) * w


def camera_frame_coords(points, motion: MotionParams) -> np.ndarray:
    """Coordinates of world points in the camera frame after ``motion``.

    Accepts a single (3,) point or an (n, 3) batch; returns the same shape.
    This is ``R^-1 (P - t)`` with the inverse taken as the transpose.

    The rows are expanded elementwise (no matmul) so the floating-point
    operation order matches the render kernels exactly; keep the three
    implementations in sync if this ever changes.
    """
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != 3:
        raise ValueError(f"points must have shape (n, 3), got {pts.shape}")
    Rinv = rotation_from_axis_angle(motion.rotvec).T
    t = motion.translation
    dx = pts[:, 0] - t[0]
    dy = pts[:, 1] - t[1]
    dz = pts[:, 2] - t[2]
    out = np.empty_like(pts)
    out[:, 0] = Rinv[0, 0] * dx + Rinv[0, 1] * dy + Rinv[0, 2] * dz
    out[:, 1] = Rinv[1, 0] * dx + Rinv[1, 1] * dy + Rinv[1, 2] * dz
    out[:, 2] = Rinv[2, 0] * dx + Rinv[2, 1] * dy + Rinv[2, 2] * dz
    return out[0] if single else out


def project_point(point, motion: MotionParams, intrinsics: CameraIntrinsics):
    """Project one 3D point through a camera motion.

    Returns ``(pixel, depth)`` where pixel is the continuous (u, v) image
    position and depth the distance along the post-motion optical axis.
    Raises BehindCameraError when the depth is <= DEPTH_EPSILON; callers
    rendering whole clouds filter such points instead.
    """
    p_cam = camera_frame_coords(_as_vec3(point, "point"), motion)
    depth = float(p_cam[2])
    if depth <= DEPTH_EPSILON:
        raise BehindCameraError(
            f"point has depth {depth:.3e} <= {DEPTH_EPSILON:.0e} after motion"
        )
    u = intrinsics.fx * p_cam[0] / depth + intrinsics.cx
    v = intrinsics.fy * p_cam[1] / depth + intrinsics.cy
    return np.array([u, v]), depth


def project_points(points, motion: MotionParams, intrinsics: CameraIntrinsics):
    """Vectorized projection of an (n, 3) batch.

    Returns ``(pixels, depths, in_front)`` where pixels is (n, 2); entries
    with ``in_front`` False (depth <= DEPTH_EPSILON) hold NaN pixels.
    """
    p_cam = np.atleast_2d(camera_frame_coords(points, motion))
    depths = p_cam[:, 2].copy()
    in_front = depths > DEPTH_EPSILON
    safe = np.where(in_front, depths, 1.0)
    u = intrinsics.fx * p_cam[:, 0] / safe + intrinsics.cx
    v = intrinsics.fy * p_cam[:, 1] / safe + intrinsics.cy
    pixels = np.stack([u, v], axis=1)
    pixels[~in_front] = np.nan
    return pixels, depths, in_front
