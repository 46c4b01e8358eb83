"""Z-buffered splatting of colored point clouds onto the pixel grid.

Each cloud point projects to a continuous pixel position; the integer pixel
it falls into (by floor) receives the color of the nearest such point
(minimum depth, ties broken toward the lowest point index within a 1e-12
depth tolerance). Pixels no point lands in hold 0.0 on all channels and are
flagged uncovered in the coverage mask so downstream consumers can ignore
holes. No interpolation and no point radius: one point paints at most one
pixel.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .geometry import (
    DEPTH_EPSILON,
    CameraIntrinsics,
    MotionParams,
    rotation_from_axis_angle,
)
from .motion import compose
from .pointcloud import ColoredPointCloud

IMAGE_MAGIC = b"CMSIMG01"
HOLE_FILL = 0.0


@dataclass(frozen=True, eq=False)
class ProjectedImage:
    """Rendered H x W x C image plus the mask of pixels that got a point."""

    pixels: np.ndarray
    coverage: np.ndarray
    intrinsics: CameraIntrinsics

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float32)
        cov = np.asarray(self.coverage, dtype=bool)
        h, w = self.intrinsics.height, self.intrinsics.width
        if px.ndim != 3 or px.shape[:2] != (h, w):
            raise ValueError(
                f"pixels must be ({h}, {w}, C), got {px.shape}"
            )
        if cov.shape != (h, w):
            raise ValueError(f"coverage must be ({h}, {w}), got {cov.shape}")
        px.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "pixels", px)
        object.__setattr__(self, "coverage", cov)

    @property
    def channel_count(self) -> int:
        return self.pixels.shape[2]


@dataclass(frozen=True, eq=False)
class SceneFrame:
    """A cloud together with the camera pose rendering starts from.

    ``base_pose`` maps the cloud's reference frame to the camera frame that
    perturbations are measured against, so rendering the frame under motion
    ``alpha`` uses the chained motion compose(base_pose, alpha).
    """

    cloud: ColoredPointCloud
    base_pose: MotionParams = field(default_factory=MotionParams.identity)

    def perturbed(self, alpha: MotionParams) -> "SceneFrame":
        """Frame whose unperturbed view is this frame viewed under ``alpha``."""
        return SceneFrame(self.cloud, compose(self.base_pose, alpha))


def render(
    frame: SceneFrame, alpha: MotionParams, intrinsics: CameraIntrinsics
) -> ProjectedImage:
    """Render the frame's cloud as seen after camera motion ``alpha``."""
    cloud = frame.cloud
    if len(cloud) == 0:
        raise ValueError("cannot render an empty cloud")
    total = compose(frame.base_pose, alpha)
    rinv = np.ascontiguousarray(rotation_from_axis_angle(total.rotvec).T)
    winner = _kernels.render_winner(
        cloud.positions, rinv, total.translation,
        intrinsics.fx, intrinsics.fy, intrinsics.cx, intrinsics.cy,
        intrinsics.width, intrinsics.height, DEPTH_EPSILON,
    )
    h, w, c = intrinsics.height, intrinsics.width, cloud.channel_count
    pixels = np.full((h * w, c), HOLE_FILL, dtype=np.float32)
    covered = winner >= 0
    pixels[covered] = cloud.colors[winner[covered]].astype(np.float32)
    return ProjectedImage(
        pixels.reshape(h, w, c), covered.reshape(h, w), intrinsics
    )


def relative_project(
    frame: SceneFrame, alpha: MotionParams, intrinsics: CameraIntrinsics
) -> ProjectedImage:
    """The frame's unperturbed view re-rendered under extra motion ``alpha``.

    Identical to ``render``; the separate name lets callers state that they
    are perturbing an existing view rather than posing a fresh camera.
    """
    return render(frame, alpha, intrinsics)


def write_image_tensor(image: ProjectedImage | np.ndarray) -> bytes:
    """Serialize pixels as magic + u32 height + u32 width + f32 HWC data."""
    pixels = image.pixels if isinstance(image, ProjectedImage) else np.asarray(image)
    if pixels.ndim != 3:
        raise ValueError(f"expected an (H, W, C) array, got shape {pixels.shape}")
    h, w, _ = pixels.shape
    payload = np.ascontiguousarray(pixels, dtype="<f4").tobytes()
    return IMAGE_MAGIC + struct.pack("<II", h, w) + payload


def read_image_tensor(data: bytes) -> np.ndarray:
    """Inverse of write_image_tensor; returns the (H, W, C) float32 array."""
    if len(data) < 16 or data[:8] != IMAGE_MAGIC:
        raise ValueError("not an image tensor (bad magic)")
    h, w = struct.unpack("<II", data[8:16])
    payload = data[16:]
    if h * w == 0:
        raise ValueError("image tensor with an empty grid")
    if len(payload) % (4 * h * w) != 0:
        raise ValueError(
            f"payload of {len(payload)} bytes is not a whole number of "
            f"{h}x{w} float32 channels"
        )
    c = len(payload) // (4 * h * w)
    if c == 0:
        raise ValueError("image tensor with zero channels")
    return np.frombuffer(payload, dtype="<f4").reshape(h, w, c).copy()


def write_png(image: ProjectedImage | np.ndarray, path) -> None:
    """8-bit PNG export for eyeballing renders (round-half-up quantization)."""
    from PIL import Image

    pixels = image.pixels if isinstance(image, ProjectedImage) else np.asarray(image)
    quant = np.floor(np.clip(pixels, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    if quant.shape[2] == 1:
        Image.fromarray(quant[:, :, 0], mode="L").save(path)
    elif quant.shape[2] == 3:
        Image.fromarray(quant, mode="RGB").save(path)
    else:
        raise ValueError(f"PNG export supports 1 or 3 channels, got {quant.shape[2]}")
