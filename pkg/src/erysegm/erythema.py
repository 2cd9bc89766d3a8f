"""ΔA* difference map, μ+kσ thresholding, cleanup, and visual artifacts.

Statistics use the population standard deviation (divisor n): they
describe this image's pixel set, not a sample estimate. The threshold is
strict (delta > tau) so a constant map yields an empty mask.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import SegmentationError
from .imaging import LabImage, RasterImage
from .masking import morph_close, morph_open

DEFAULT_K = 1.5
DEFAULT_OPEN_RADIUS = 1
DEFAULT_CLOSE_RADIUS = 2
DEFAULT_MIN_AREA_FRACTION = 0.0005
DEFAULT_HIST_BINS = 64

HEATMAP_NEUTRAL = (128, 128, 128)


@dataclass(frozen=True)
class DeltaMap:
    """Signed a*-difference per pixel; defined only where domain is true."""

    delta_a: np.ndarray
    domain: np.ndarray

    def __post_init__(self) -> None:
        if self.delta_a.shape != self.domain.shape or self.delta_a.ndim != 2:
            raise ValueError("delta_a and domain must share one (H, W) shape")

    @property
    def width(self) -> int:
        return self.delta_a.shape[1]

    @property
    def height(self) -> int:
        return self.delta_a.shape[0]


@dataclass(frozen=True)
class DeltaStats:
    mu: float
    sigma: float
    k: float
    tau: float
    n: int

    def __post_init__(self) -> None:
        if self.sigma < 0 or self.n < 1:
            raise ValueError("sigma must be >= 0 and n >= 1")


@dataclass(frozen=True)
class HistogramData:
    bin_edges: np.ndarray
    counts: np.ndarray
    mu: float
    tau: float


def delta_a(orig: LabImage, ref: LabImage, mask: np.ndarray) -> DeltaMap:
    """orig.a - ref.a gated by mask; positive means the original is redder."""
    if orig.L.shape != ref.L.shape:
        raise SegmentationError(
            f"dimension-mismatch: original {orig.L.shape} vs reference {ref.L.shape}"
        )
    if mask.shape != orig.L.shape:
        raise SegmentationError(f"dimension-mismatch: mask {mask.shape} vs image {orig.L.shape}")
    delta = (orig.a.astype(np.float64) - ref.a.astype(np.float64)).astype(np.float32)
    return DeltaMap(delta, mask.astype(bool))


def delta_stats(dmap: DeltaMap, k: float = DEFAULT_K) -> DeltaStats:
    values = dmap.delta_a[dmap.domain].astype(np.float64)
    if values.size == 0:
        raise SegmentationError("empty-domain: no pixels to compute statistics over")
    mu = float(values.mean())
    sigma = float(values.std())  # population form, divisor n
    return DeltaStats(mu=mu, sigma=sigma, k=float(k), tau=mu + float(k) * sigma, n=int(values.size))


def threshold_mask(dmap: DeltaMap, stats: DeltaStats) -> np.ndarray:
    """True exactly where the pixel is in the domain and delta_a > tau."""
    return dmap.domain & (dmap.delta_a > stats.tau)


def remove_small_components(mask: np.ndarray, min_area: int) -> np.ndarray:
    """Drop 8-connected components with fewer than min_area pixels."""
    if min_area <= 1 or not mask.any():
        return mask.copy()
    labels, count = ndimage.label(mask, structure=np.ones((3, 3), dtype=bool))
    if count == 0:
        return mask.copy()
    sizes = np.bincount(labels.ravel())
    keep = sizes >= min_area
    keep[0] = False
    return keep[labels]


def postprocess(
    mask: np.ndarray,
    open_radius: int = DEFAULT_OPEN_RADIUS,
    close_radius: int = DEFAULT_CLOSE_RADIUS,
    min_area: int = 0,
) -> np.ndarray:
    """Morphological open then close, then drop small components."""
    if open_radius < 0 or close_radius < 0 or min_area < 0:
        raise ValueError("postprocess parameters must be >= 0")
    out = morph_open(mask, open_radius)
    out = morph_close(out, close_radius)
    return remove_small_components(out, min_area)


def histogram(dmap: DeltaMap, stats: DeltaStats, bins: int = DEFAULT_HIST_BINS) -> HistogramData:
    """Equal-width bins spanning the domain's value range."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    values = dmap.delta_a[dmap.domain].astype(np.float64)
    if values.size == 0:
        raise SegmentationError("empty-domain: nothing to bin")
    lo = float(values.min())
    hi = float(values.max())
    if lo == hi:
        # Single-value map: one degenerate bin centered on the value.
        edges = np.array([lo - 0.5, lo + 0.5])
        counts = np.array([values.size], dtype=np.int64)
    else:
        counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    return HistogramData(bin_edges=edges, counts=counts.astype(np.int64), mu=stats.mu, tau=stats.tau)


def histogram_to_csv(hist: HistogramData, path: str | os.PathLike) -> None:
    with open(os.fspath(path), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_lo", "bin_hi", "count"])
        for i, count in enumerate(hist.counts):
            writer.writerow([f"{hist.bin_edges[i]:.6f}", f"{hist.bin_edges[i + 1]:.6f}", int(count)])


def render_heatmap(dmap: DeltaMap, scale: tuple[float, float] | None = None) -> RasterImage:
    """Diverging blue-white-red map of delta_a; zero is white.

    Pixels outside the domain render neutral gray. The default scale is
    symmetric around zero at the maximum |delta_a| over the domain.
    """
    delta = dmap.delta_a.astype(np.float64)
    if scale is None:
        mag = float(np.abs(delta[dmap.domain]).max()) if dmap.domain.any() else 0.0
        lo, hi = -mag, mag
    else:
        lo, hi = float(scale[0]), float(scale[1])
    hi = max(hi, 1e-9)
    lo = min(lo, -1e-9)

    pos = np.clip(delta / hi, 0.0, 1.0)
    neg = np.clip(delta / lo, 0.0, 1.0)
    out = np.empty(delta.shape + (3,), dtype=np.float64)
    out[..., 0] = 255.0 * (1.0 - neg)            # red fades toward the blue end
    out[..., 1] = 255.0 * (1.0 - pos) * (1.0 - neg)
    out[..., 2] = 255.0 * (1.0 - pos)            # blue fades toward the red end
    img = np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)
    img[~dmap.domain] = HEATMAP_NEUTRAL
    return RasterImage(img)


def render_overlay(
    original: RasterImage,
    mask: np.ndarray,
    color: tuple[int, int, int] = (255, 0, 0),
    alpha: float = 0.4,
) -> RasterImage:
    """Blend ``color`` over masked pixels; everything else is bit-exact."""
    if mask.shape != original.pixels.shape[:2]:
        raise SegmentationError(
            f"dimension-mismatch: mask {mask.shape} vs image {original.pixels.shape[:2]}"
        )
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    out = original.pixels.copy()
    if mask.any():
        blended = (1.0 - alpha) * original.pixels[mask].astype(np.float64) + alpha * np.array(
            color, dtype=np.float64
        )
        out[mask] = np.clip(np.floor(blended + 0.5), 0, 255).astype(np.uint8)
    return RasterImage(out)


def render_histogram_chart(
    hist: HistogramData, width: int = 640, height: int = 400
) -> RasterImage:
    """Self-contained bar-chart rendering of the ΔA histogram.

    Bars in blue, mean marker in green, threshold marker in red; drawn
    without text so output bytes depend only on the data.
    """
    pad = 24
    img = np.full((height, width, 3), 255, dtype=np.uint8)
    plot_w = width - 2 * pad
    plot_h = height - 2 * pad

    lo = float(hist.bin_edges[0])
    hi = float(hist.bin_edges[-1])
    span = max(hi - lo, 1e-9)
    max_count = max(int(hist.counts.max()), 1)

    def to_x(value: float) -> int:
        return pad + int(np.floor((value - lo) / span * (plot_w - 1)))

    for i, count in enumerate(hist.counts):
        x0 = to_x(float(hist.bin_edges[i]))
        x1 = max(to_x(float(hist.bin_edges[i + 1])) - 1, x0)
        bar_h = int(np.floor(count / max_count * (plot_h - 1)))
        if bar_h > 0:
            img[height - pad - bar_h : height - pad, x0 : x1 + 1] = (70, 110, 180)

    for value, color in ((hist.mu, (30, 140, 30)), (hist.tau, (200, 30, 30))):
        if lo <= value <= hi:
            x = to_x(value)
            img[pad : height - pad, x : x + 1] = color

    # Axis lines.
    img[height - pad, pad : width - pad] = (60, 60, 60)
    img[pad : height - pad + 1, pad - 1] = (60, 60, 60)
    return RasterImage(img)
