"""Inverse-mapped bilinear warping and overlap cropping."""

from __future__ import annotations

import numpy as np

from ..errors import AlignmentError
from ..imaging import CropRect, RasterImage

DEFAULT_MIN_COVERAGE = 0.999


def _bilinear_sample(pixels: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample (H, W, C) uint8 at float coords; caller guarantees in-bounds."""
    h, w = pixels.shape[:2]
    x0 = np.clip(np.floor(xs).astype(np.intp), 0, w - 2)
    y0 = np.clip(np.floor(ys).astype(np.intp), 0, h - 2)
    fx = (xs - x0)[..., None]
    fy = (ys - y0)[..., None]
    p = pixels.astype(np.float32)
    top = p[y0, x0] * (1 - fx) + p[y0, x0 + 1] * fx
    bot = p[y0 + 1, x0] * (1 - fx) + p[y0 + 1, x0 + 1] * fx
    return top * (1 - fy) + bot * fy


def warp_to(
    reference: RasterImage,
    h: np.ndarray,
    out_width: int,
    out_height: int,
    fill: int = 0,
) -> tuple[RasterImage, np.ndarray]:
    """Warp ``reference`` onto an out_width x out_height grid under h.

    h maps reference coordinates to output coordinates; each output pixel
    p samples the reference at h^-1 p with bilinear interpolation. The
    validity mask is true exactly where the source location falls inside
    the reference with full bilinear support; fill value is used elsewhere
    (validity is never inferred from pixel values).
    """
    if abs(np.linalg.det(h)) < 1e-12:
        raise AlignmentError("singular-homography: cannot invert for warping")
    hinv = np.linalg.inv(h)

    ys, xs = np.mgrid[0:out_height, 0:out_width]
    denom = hinv[2, 0] * xs + hinv[2, 1] * ys + hinv[2, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        sx = (hinv[0, 0] * xs + hinv[0, 1] * ys + hinv[0, 2]) / denom
        sy = (hinv[1, 0] * xs + hinv[1, 1] * ys + hinv[1, 2]) / denom

    rh, rw = reference.pixels.shape[:2]
    valid = (
        np.isfinite(sx)
        & np.isfinite(sy)
        & (np.abs(denom) > 1e-12)
        & (sx >= 0.0)
        & (sx <= rw - 1.0)
        & (sy >= 0.0)
        & (sy <= rh - 1.0)
    )

    out = np.full((out_height, out_width, 3), fill, dtype=np.uint8)
    if valid.any():
        sampled = _bilinear_sample(reference.pixels, sx[valid], sy[valid])
        out[valid] = np.clip(np.floor(sampled + 0.5), 0, 255).astype(np.uint8)
    return RasterImage(out), valid


def resize_bilinear(image: RasterImage, out_width: int, out_height: int) -> RasterImage:
    """Plain bilinear resize with pixel-center alignment and edge clamping."""
    h, w = image.pixels.shape[:2]
    if (w, h) == (out_width, out_height):
        return RasterImage(image.pixels.copy())
    xs = (np.arange(out_width) + 0.5) * (w / out_width) - 0.5
    ys = (np.arange(out_height) + 0.5) * (h / out_height) - 0.5
    gx, gy = np.meshgrid(np.clip(xs, 0, w - 1), np.clip(ys, 0, h - 1))
    sampled = _bilinear_sample(image.pixels, gx, gy)
    return RasterImage(np.clip(np.floor(sampled + 0.5), 0, 255).astype(np.uint8))


def central_crop(
    original: RasterImage,
    warped: RasterImage,
    valid: np.ndarray,
    min_coverage: float = DEFAULT_MIN_COVERAGE,
) -> tuple[RasterImage, RasterImage, np.ndarray, CropRect]:
    """Crop both images to the largest centered rectangle that is valid.

    The rectangle is the maximum-area axis-aligned rectangle centered on
    the image whose valid-mask coverage is at least ``min_coverage``.
    """
    if original.pixels.shape != warped.pixels.shape or valid.shape != original.pixels.shape[:2]:
        raise AlignmentError("dimension-mismatch between original, warped, and valid mask")
    h, w = valid.shape

    integral = np.zeros((h + 1, w + 1), dtype=np.int64)
    integral[1:, 1:] = np.cumsum(np.cumsum(valid.astype(np.int64), axis=0), axis=1)

    hs = np.arange(1, h + 1)[:, None]
    ws = np.arange(1, w + 1)[None, :]
    tops = (h - hs) // 2
    lefts = (w - ws) // 2
    cov = (
        integral[tops + hs, lefts + ws]
        - integral[tops, lefts + ws]
        - integral[tops + hs, lefts]
        + integral[tops, lefts]
    )
    areas = hs * ws
    ok = cov >= min_coverage * areas - 1e-9
    if not ok.any():
        raise AlignmentError("no-valid-overlap: no centered rectangle meets the coverage requirement")

    score = np.where(ok, areas, 0)
    flat = int(np.argmax(score))  # first max in row-major order: deterministic
    rh = flat // w + 1
    rw = flat % w + 1
    rect = CropRect(x=(w - rw) // 2, y=(h - rh) // 2, width=rw, height=rh)

    sl = (slice(rect.y, rect.y + rect.height), slice(rect.x, rect.x + rect.width))
    return (
        RasterImage(original.pixels[sl].copy()),
        RasterImage(warped.pixels[sl].copy()),
        valid[sl].copy(),
        rect,
    )
