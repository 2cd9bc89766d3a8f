"""Image buffers, PNG/JPEG I/O, grayscale, sRGB→CIELAB, and MSE.

Conventions fixed project-wide:

- Pixel arrays are row-major ``(height, width, channels)`` uint8; loaded
  images are always RGB (alpha is dropped at load time and recorded).
- Grayscale uses BT.601 luma weights and stays on the 0..255 scale as
  float32.
- CIELAB uses the IEC 61966-2-1 sRGB transfer function and matrix with the
  D65 reference white (X=0.95047, Y=1.0, Z=1.08883), stored as float32.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageIOError, SegmentationError

# BT.601 luma weights; sum is exactly 1.0 so white maps to 255.0.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

# sRGB (linear) -> CIE XYZ, D65 white, IEC 61966-2-1.
SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
D65_WHITE = np.array([0.95047, 1.0, 1.08883])

# CIE f(t) breakpoints in the rational form (216/24389 = (6/29)^3).
_LAB_EPS = 216.0 / 24389.0
_LAB_KAPPA = 24389.0 / 27.0


class CropRect(NamedTuple):
    """Axis-aligned crop rectangle in pixel coordinates (x, y = top-left)."""

    x: int
    y: int
    width: int
    height: int


@dataclass(frozen=True)
class RasterImage:
    """8-bit RGB image; ``pixels`` is (H, W, 3) uint8.

    ``had_alpha`` records whether the source file carried an alpha channel
    that was dropped at load time.
    """

    pixels: np.ndarray
    had_alpha: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3 or p.dtype != np.uint8:
            raise ValueError(f"RasterImage needs (H, W, 3) uint8, got {p.shape} {p.dtype}")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError("RasterImage needs width and height >= 1")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class GrayImage:
    """Single-channel image on the 0..255 scale; ``data`` is (H, W) float32."""

    data: np.ndarray

    def __post_init__(self) -> None:
        if self.data.ndim != 2 or self.data.dtype != np.float32:
            raise ValueError(f"GrayImage needs (H, W) float32, got {self.data.shape} {self.data.dtype}")

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class LabImage:
    """Per-pixel CIELAB planes, each (H, W) float32."""

    L: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        if not (self.L.shape == self.a.shape == self.b.shape) or self.L.ndim != 2:
            raise ValueError("LabImage planes must share one (H, W) shape")

    @property
    def width(self) -> int:
        return self.L.shape[1]

    @property
    def height(self) -> int:
        return self.L.shape[0]


def load_image(path: str | os.PathLike) -> RasterImage:
    """Decode a PNG or baseline JPEG file into an RGB RasterImage.

    RGBA alpha is dropped (recorded in ``had_alpha``). 16-bit and indexed
    PNGs are rejected so colorimetry stays bit-exact on true 8-bit input.
    """
    path = os.fspath(path)
    if not os.path.exists(path):
        raise ImageIOError(f"file-not-found: {path}")
    try:
        with Image.open(path) as img:
            fmt = img.format
            if fmt not in ("PNG", "JPEG"):
                raise ImageIOError(f"unsupported-format: {path} is {fmt or 'unknown'}, need PNG or JPEG")
            if img.mode not in ("RGB", "RGBA"):
                raise ImageIOError(
                    f"unsupported-format: {path} has mode {img.mode}, need 8-bit RGB or RGBA"
                )
            had_alpha = img.mode == "RGBA"
            arr = np.asarray(img, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise ImageIOError(f"corrupt-stream: {path} could not be identified") from exc
    except OSError as exc:
        raise ImageIOError(f"corrupt-stream: {path}: {exc}") from exc
    if had_alpha:
        arr = arr[:, :, :3]
    return RasterImage(np.ascontiguousarray(arr), had_alpha=had_alpha)


def encode_png(image: RasterImage, path: str | os.PathLike) -> None:
    """Write a lossless RGB PNG; round-trips byte-for-byte via load_image."""
    path = os.fspath(path)
    try:
        Image.fromarray(image.pixels, mode="RGB").save(path, format="PNG")
    except OSError as exc:
        raise ImageIOError(f"io-error: cannot write {path}: {exc}") from exc


def encode_gray_png(data: np.ndarray, path: str | os.PathLike) -> None:
    """Write a single-channel 8-bit PNG from a (H, W) uint8 array."""
    path = os.fspath(path)
    if data.ndim != 2 or data.dtype != np.uint8:
        raise ValueError("encode_gray_png needs (H, W) uint8")
    try:
        Image.fromarray(data, mode="L").save(path, format="PNG")
    except OSError as exc:
        raise ImageIOError(f"io-error: cannot write {path}: {exc}") from exc


def to_grayscale(image: RasterImage) -> GrayImage:
    """BT.601 luma on the 0..255 scale."""
    w = LUMA_WEIGHTS
    p = image.pixels.astype(np.float32)
    gray = p[:, :, 0] * w[0] + p[:, :, 1] * w[1] + p[:, :, 2] * w[2]
    return GrayImage(gray.astype(np.float32))


def _srgb_inverse_transfer(c: np.ndarray) -> np.ndarray:
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _lab_f(t: np.ndarray) -> np.ndarray:
    return np.where(t > _LAB_EPS, np.cbrt(t), (_LAB_KAPPA * t + 16.0) / 116.0)


def srgb_to_lab(image: RasterImage) -> LabImage:
    """Per-pixel sRGB → linear RGB → XYZ (D65) → CIELAB."""
    rgb = image.pixels.astype(np.float64) / 255.0
    lin = _srgb_inverse_transfer(rgb)
    xyz = lin @ SRGB_TO_XYZ.T
    f = _lab_f(xyz / D65_WHITE)
    L = 116.0 * f[:, :, 1] - 16.0
    a = 500.0 * (f[:, :, 0] - f[:, :, 1])
    b = 200.0 * (f[:, :, 1] - f[:, :, 2])
    return LabImage(L.astype(np.float32), a.astype(np.float32), b.astype(np.float32))


def mse(a: RasterImage, b: RasterImage, mask: np.ndarray | None = None) -> float:
    """Mean squared 8-bit difference over (masked) pixels and channels."""
    if a.pixels.shape != b.pixels.shape:
        raise SegmentationError(
            f"dimension-mismatch: {a.pixels.shape} vs {b.pixels.shape}"
        )
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    sq = diff * diff
    if mask is None:
        return float(sq.mean())
    if mask.shape != a.pixels.shape[:2]:
        raise SegmentationError(
            f"dimension-mismatch: mask {mask.shape} vs image {a.pixels.shape[:2]}"
        )
    n = int(np.count_nonzero(mask))
    if n == 0:
        raise SegmentationError("empty-mask: no pixels selected for mse")
    return float(sq[mask].mean())
