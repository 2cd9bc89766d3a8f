"""Keypoint detection, binary descriptors, and Hamming matching.

Self-contained detector family: FAST-style segment-test corners ranked by
Harris response, intensity-centroid orientation, and a steered 256-bit
BRIEF-style descriptor whose sampling pattern is fixed at import time from
a seeded RNG. Everything is deterministic for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import AlignmentError
from ..imaging import GrayImage

# Bresenham circle of radius 3, as (dx, dy), clockwise from 12 o'clock.
FAST_CIRCLE = np.array(
    [
        (0, -3), (1, -3), (2, -2), (3, -1),
        (3, 0), (3, 1), (2, 2), (1, 3),
        (0, 3), (-1, 3), (-2, 2), (-3, 1),
        (-3, 0), (-3, -1), (-2, -2), (-1, -3),
    ]
)
FAST_ARC = 9  # contiguous circle pixels required (FAST-9)
SADDLE_ARC = 4  # per-polarity arc required when both polarities are present

ORIENTATION_RADIUS = 15
BRIEF_RADIUS = 13
DESCRIPTOR_BITS = 256

# Keypoints must keep this distance from the border so the orientation
# patch and the rotated sampling pattern stay inside the image.
KEYPOINT_MARGIN = ORIENTATION_RADIUS + 1

_HARRIS_K = 0.04
_HARRIS_WINDOW = 5
_SMOOTH_WINDOW = 5

DEFAULT_MAX_KEYPOINTS = 2000
DEFAULT_FAST_THRESHOLD = 20.0
DEFAULT_RATIO_MAX = 0.75


def _brief_pattern() -> np.ndarray:
    # Pattern frozen at build time: (256, 2, 2) float, (pair, endpoint, xy).
    # Points are pulled back inside the BRIEF_RADIUS disc (not a box) so
    # rotated offsets never leave the keypoint margin.
    rng = np.random.default_rng(20240611)
    pts = rng.normal(0.0, BRIEF_RADIUS / 2.0, size=(DESCRIPTOR_BITS, 2, 2))
    norms = np.linalg.norm(pts, axis=2, keepdims=True)
    scale = np.minimum(1.0, BRIEF_RADIUS / np.maximum(norms, 1e-9))
    return pts * scale


BRIEF_PATTERN = _brief_pattern()

_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    score: float
    orientation: float  # radians in [0, 2*pi)


@dataclass(frozen=True)
class Match:
    index_a: int
    index_b: int
    distance: int
    ratio: float


def _orientation_grids() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    r = ORIENTATION_RADIUS
    dy, dx = np.mgrid[-r : r + 1, -r : r + 1]
    disc = (dy * dy + dx * dx <= r * r).astype(np.float32)
    return dy.astype(np.float32), dx.astype(np.float32), disc


_ORIENT_DY, _ORIENT_DX, _ORIENT_DISC = _orientation_grids()


def _harris_response(data: np.ndarray) -> np.ndarray:
    gy, gx = np.gradient(data)
    sxx = ndimage.uniform_filter(gx * gx, size=_HARRIS_WINDOW)
    syy = ndimage.uniform_filter(gy * gy, size=_HARRIS_WINDOW)
    sxy = ndimage.uniform_filter(gx * gy, size=_HARRIS_WINDOW)
    det = sxx * syy - sxy * sxy
    trace = sxx + syy
    return det - _HARRIS_K * trace * trace


def _fast_corner_mask_at(data: np.ndarray, ys: np.ndarray, xs: np.ndarray, threshold: float) -> np.ndarray:
    """Full 16-point segment test at candidate pixels; True where a corner.

    A pixel is a corner when one polarity shows a contiguous arc of 9, or
    when one polarity shows two disjoint runs of at least SADDLE_ARC. The
    second rule covers saddle points (checkerboard junctions): the two
    diagonal cells matching the center never fire, leaving two opposite
    arcs of the other shade, while edges produce a single run and so stay
    rejected.
    """
    center = data[ys, xs]
    circle = data[ys[None, :] + FAST_CIRCLE[:, 1, None], xs[None, :] + FAST_CIRCLE[:, 0, None]]
    bright = circle > center[None, :] + threshold
    dark = circle < center[None, :] - threshold

    def has_arc(flags: np.ndarray, length: int) -> np.ndarray:
        ext = np.concatenate([flags, flags[: length - 1]], axis=0).astype(np.int16)
        cs = np.concatenate([np.zeros((1, flags.shape[1]), dtype=np.int16), np.cumsum(ext, axis=0)])
        window = cs[length:] - cs[:16]
        return (window == length).any(axis=0)

    def run_starts(flags: np.ndarray, length: int) -> np.ndarray:
        # Count circular runs of at least `length`: positions that open a
        # run (previous is false) and are followed by length-1 more trues.
        ext = np.concatenate([flags, flags[: length - 1]], axis=0)
        window = np.ones_like(flags)
        for i in range(length):
            window &= ext[i : i + 16]
        starts = window & ~np.roll(flags, 1, axis=0)
        return starts.sum(axis=0)

    single = has_arc(bright, FAST_ARC) | has_arc(dark, FAST_ARC)
    saddle = (run_starts(bright, SADDLE_ARC) >= 2) | (run_starts(dark, SADDLE_ARC) >= 2)
    return single | saddle


def detect_keypoints(
    image: GrayImage,
    max_count: int = DEFAULT_MAX_KEYPOINTS,
    threshold: float = DEFAULT_FAST_THRESHOLD,
) -> list[Keypoint]:
    """FAST-9 corners ranked by Harris response, strongest first.

    Keypoints closer than KEYPOINT_MARGIN to the border are discarded.
    Constant images yield an empty list; images too small to host any
    valid keypoint raise image-too-small.
    """
    data = image.data
    h, w = data.shape
    if h < 2 * KEYPOINT_MARGIN + 1 or w < 2 * KEYPOINT_MARGIN + 1:
        raise AlignmentError(f"image-too-small: {w}x{h} cannot host the detector footprint")

    # Cheap precheck on the 4 compass points: a 9-arc covers >= 2 of them,
    # and two disjoint 4-runs cover two distinct ones, so every accepted
    # corner shape has >= 2 hits of its polarity here.
    c = data[3 : h - 3, 3 : w - 3]
    bright_cnt = np.zeros(c.shape, dtype=np.uint8)
    dark_cnt = np.zeros(c.shape, dtype=np.uint8)
    for i in (0, 4, 8, 12):
        dx, dy = FAST_CIRCLE[i]
        v = data[3 + dy : h - 3 + dy, 3 + dx : w - 3 + dx]
        bright_cnt += v > c + threshold
        dark_cnt += v < c - threshold
    cand = (bright_cnt >= 2) | (dark_cnt >= 2)

    ys, xs = np.nonzero(cand)
    ys = ys + 3
    xs = xs + 3
    keep = (
        (xs >= KEYPOINT_MARGIN)
        & (xs <= w - 1 - KEYPOINT_MARGIN)
        & (ys >= KEYPOINT_MARGIN)
        & (ys <= h - 1 - KEYPOINT_MARGIN)
    )
    ys, xs = ys[keep], xs[keep]
    if ys.size == 0:
        return []

    corner = _fast_corner_mask_at(data, ys, xs, threshold)
    ys, xs = ys[corner], xs[corner]
    if ys.size == 0:
        return []

    harris = _harris_response(data)
    scores = harris[ys, xs]
    positive = scores > 0.0  # edge-like responses are dropped
    ys, xs, scores = ys[positive], xs[positive], scores[positive]
    if ys.size == 0:
        return []

    # 3x3 non-max suppression on the sparse response image.
    resp = np.zeros((h, w), dtype=np.float64)
    resp[ys, xs] = scores
    local_max = ndimage.maximum_filter(resp, size=3)
    keep = resp[ys, xs] >= local_max[ys, xs]
    ys, xs, scores = ys[keep], xs[keep], scores[keep]

    order = np.lexsort((xs, ys, -scores))
    ys, xs, scores = ys[order][:max_count], xs[order][:max_count], scores[order][:max_count]

    angles = _orientations(data, ys, xs)
    return [
        Keypoint(float(x), float(y), float(s), float(a))
        for x, y, s, a in zip(xs, ys, scores, angles)
    ]


def _orientations(data: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Intensity-centroid angle over a radius-15 disc, in [0, 2*pi)."""
    r = ORIENTATION_RADIUS
    patches = data[
        ys[:, None, None] + np.arange(-r, r + 1)[None, :, None],
        xs[:, None, None] + np.arange(-r, r + 1)[None, None, :],
    ]
    weighted = patches * _ORIENT_DISC[None, :, :]
    m10 = (weighted * _ORIENT_DX[None, :, :]).sum(axis=(1, 2))
    m01 = (weighted * _ORIENT_DY[None, :, :]).sum(axis=(1, 2))
    angles = np.arctan2(m01, m10)
    return np.mod(angles, 2.0 * np.pi)


def compute_descriptors(
    image: GrayImage, keypoints: list[Keypoint]
) -> tuple[np.ndarray, np.ndarray]:
    """Steered 256-bit BRIEF descriptors.

    Returns (descriptors, surviving) where descriptors is (M, 32) uint8,
    one row per keypoint that satisfies the border margin, and surviving
    maps rows back to indices in the input keypoint list.
    """
    data = image.data
    h, w = data.shape
    if not keypoints:
        return np.zeros((0, 32), dtype=np.uint8), np.zeros(0, dtype=np.int64)

    xs = np.array([k.x for k in keypoints])
    ys = np.array([k.y for k in keypoints])
    angles = np.array([k.orientation for k in keypoints])
    inside = (
        (xs >= KEYPOINT_MARGIN)
        & (xs <= w - 1 - KEYPOINT_MARGIN)
        & (ys >= KEYPOINT_MARGIN)
        & (ys <= h - 1 - KEYPOINT_MARGIN)
    )
    surviving = np.nonzero(inside)[0]
    if surviving.size == 0:
        return np.zeros((0, 32), dtype=np.uint8), surviving

    xs, ys, angles = xs[surviving], ys[surviving], angles[surviving]
    smooth = ndimage.uniform_filter(data, size=_SMOOTH_WINDOW)

    cos = np.cos(angles)[:, None]
    sin = np.sin(angles)[:, None]
    px = BRIEF_PATTERN[:, :, 0]  # (256, 2)
    py = BRIEF_PATTERN[:, :, 1]

    samples = []
    for endpoint in range(2):
        rx = cos * px[None, :, endpoint] - sin * py[None, :, endpoint]
        ry = sin * px[None, :, endpoint] + cos * py[None, :, endpoint]
        sx = np.rint(xs[:, None] + rx).astype(np.intp)
        sy = np.rint(ys[:, None] + ry).astype(np.intp)
        samples.append(smooth[sy, sx])
    bits = samples[0] < samples[1]
    return np.packbits(bits, axis=1), surviving


def hamming_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(Na, Nb) uint16 pairwise Hamming distances between packed descriptors."""
    na = a.shape[0]
    out = np.empty((na, b.shape[0]), dtype=np.uint16)
    chunk = 256
    for start in range(0, na, chunk):
        block = a[start : start + chunk]
        xored = block[:, None, :] ^ b[None, :, :]
        out[start : start + chunk] = _POPCOUNT[xored].sum(axis=-1, dtype=np.uint16)
    return out


def match_descriptors(
    a: np.ndarray, b: np.ndarray, ratio_max: float = DEFAULT_RATIO_MAX
) -> list[Match]:
    """Mutual-best Hamming matches filtered by Lowe's ratio test.

    When b holds a single descriptor the ratio test is skipped (the second
    distance is undefined) and the match ratio is recorded as 0.
    """
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise AlignmentError("empty-descriptor-list: both descriptor sets must be non-empty")
    dist = hamming_distances(a, b)

    best_b = dist.argmin(axis=1)
    best_d = dist[np.arange(dist.shape[0]), best_b]
    if b.shape[0] >= 2:
        second_d = np.partition(dist, 1, axis=1)[:, 1]
        # 0/0 means two identical candidates in b: ambiguous, ratio 1.
        ratios = np.where(second_d > 0, best_d / np.maximum(second_d, 1), 1.0)
        ratios = np.where((best_d == 0) & (second_d == 0), 1.0, ratios)
        passed = ratios <= ratio_max
    else:
        ratios = np.zeros(dist.shape[0])
        passed = np.ones(dist.shape[0], dtype=bool)

    best_a = dist.argmin(axis=0)  # cross-check: best match of each b
    matches = []
    for i in np.nonzero(passed)[0]:
        j = best_b[i]
        if best_a[j] == i:
            matches.append(Match(int(i), int(j), int(best_d[i]), float(ratios[i])))
    return matches
