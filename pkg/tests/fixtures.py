"""Synthetic image fixtures with known ground truth."""

from __future__ import annotations

import numpy as np

from erysegm.imaging import RasterImage, srgb_to_lab
from erysegm.registration.warp import warp_to

from .oracles import lab_to_srgb_oracle, srgb_to_lab_oracle

SKIN_BASE = (205, 160, 140)


def textured_image(
    width: int = 512,
    height: int = 512,
    seed: int = 7,
    base: tuple[int, int, int] = SKIN_BASE,
    n_features: int = 220,
) -> RasterImage:
    """Smoothly shaded canvas scattered with high-contrast shapes.

    The shapes give the corner detector something to lock onto while the
    background stays smooth enough for clean resampling.
    """
    rng = np.random.default_rng(seed)
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)

    img = np.zeros((height, width, 3), dtype=np.float64)
    img[:] = base
    # Low-frequency shading so the canvas is not constant.
    for _ in range(3):
        fx, fy = rng.uniform(0.5, 2.0, size=2)
        phase = rng.uniform(0, 2 * np.pi, size=2)
        wave = np.sin(2 * np.pi * fx * xs / width + phase[0]) * np.sin(
            2 * np.pi * fy * ys / height + phase[1]
        )
        img += wave[:, :, None] * rng.uniform(3.0, 7.0)

    for _ in range(n_features if min(width, height) > 16 else 0):
        cx = rng.integers(8, width - 8)
        cy = rng.integers(8, height - 8)
        half = int(rng.integers(2, 7))
        color = rng.integers(0, 256, size=3).astype(np.float64)
        if rng.random() < 0.5:
            img[max(cy - half, 0) : cy + half, max(cx - half, 0) : cx + half] = color
        else:
            dy = ys - cy
            dx = xs - cx
            disc = dy * dy + dx * dx <= half * half
            img[disc] = color

    return RasterImage(np.clip(np.round(img), 0, 255).astype(np.uint8))


def plant_redness(
    image: RasterImage,
    patches: list[tuple[int, int, int, int]],
    boost: float = 20.0,
) -> tuple[RasterImage, np.ndarray]:
    """Raise a* by ``boost`` inside each (x, y, w, h) patch.

    Conversion runs through the test-suite oracle (not the package code)
    so planted values are independent of the implementation under test.
    Returns the modified image and the planted ground-truth mask.
    """
    out = image.pixels.copy()
    mask = np.zeros(image.pixels.shape[:2], dtype=bool)
    for x, y, w, h in patches:
        for yy in range(y, y + h):
            for xx in range(x, x + w):
                r, g, b = (int(v) for v in out[yy, xx])
                L, a, bb = srgb_to_lab_oracle(r, g, b)
                out[yy, xx] = lab_to_srgb_oracle(L, a + boost, bb)
                mask[yy, xx] = True
    return RasterImage(out), mask


def random_bounded_homography(
    rng: np.random.Generator,
    width: int,
    height: int,
    max_rot_deg: float = 3.0,
    max_scale: float = 0.03,
    max_trans: float = 10.0,
    max_persp: float = 2e-5,
) -> np.ndarray:
    """Mild perspective transform about the image center."""
    theta = np.deg2rad(rng.uniform(-max_rot_deg, max_rot_deg))
    scale = 1.0 + rng.uniform(-max_scale, max_scale)
    tx, ty = rng.uniform(-max_trans, max_trans, size=2)
    px, py = rng.uniform(-max_persp, max_persp, size=2)
    c, s = np.cos(theta), np.sin(theta)
    cx, cy = width / 2.0, height / 2.0
    to_center = np.array([[1, 0, -cx], [0, 1, -cy], [0, 0, 1.0]])
    core = np.array([[scale * c, -scale * s, tx], [scale * s, scale * c, ty], [px, py, 1.0]])
    from_center = np.array([[1, 0, cx], [0, 1, cy], [0, 0, 1.0]])
    h = from_center @ core @ to_center
    return h / h[2, 2]


def make_reference_view(original: RasterImage, h_ref_to_orig: np.ndarray) -> RasterImage:
    """Render the original as seen through the given reference→original map.

    The returned image plays the role of the synthesized reference: a
    point p in it corresponds to h_ref_to_orig @ p in the original.
    """
    h_orig_to_ref = np.linalg.inv(h_ref_to_orig)
    ref, _ = warp_to(original, h_orig_to_ref, original.width, original.height)
    return ref


def corner_error(h_est: np.ndarray, h_true: np.ndarray, width: int, height: int) -> float:
    """Max displacement of the four image corners between two maps."""
    corners = np.array(
        [[0, 0, 1], [width - 1, 0, 1], [0, height - 1, 1], [width - 1, height - 1, 1]],
        dtype=np.float64,
    )

    def apply(h: np.ndarray) -> np.ndarray:
        q = corners @ h.T
        return q[:, :2] / q[:, 2:3]

    return float(np.max(np.linalg.norm(apply(h_est) - apply(h_true), axis=1)))


def face_fixture(size: int = 512, seed: int = 11) -> tuple[RasterImage, np.ndarray]:
    """Portrait-like fixture: textured photo plus a face-parsing label map.

    Label ids follow the packaged class table: background 0, skin 1,
    nose 2, upper_lip 11, lower_lip 12, hair 13.
    """
    photo = textured_image(size, size, seed=seed)
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    labels = np.zeros((size, size), dtype=np.uint8)

    cx, cy = size / 2.0, size / 2.0
    face = ((xs - cx) / (0.34 * size)) ** 2 + ((ys - cy) / (0.42 * size)) ** 2 <= 1.0
    labels[face] = 1
    hair = ((xs - cx) / (0.38 * size)) ** 2 + ((ys - (cy - 0.1 * size)) / (0.46 * size)) ** 2 <= 1.0
    labels[hair & ~face & (ys < cy)] = 13

    nose = (np.abs(xs - cx) <= 0.04 * size) & (np.abs(ys - cy) <= 0.09 * size)
    labels[nose & face] = 2
    lip_y = cy + 0.22 * size
    upper = (np.abs(xs - cx) <= 0.1 * size) & (ys >= lip_y - 0.02 * size) & (ys < lip_y)
    lower = (np.abs(xs - cx) <= 0.1 * size) & (ys >= lip_y) & (ys <= lip_y + 0.02 * size)
    labels[upper & face] = 11
    labels[lower & face] = 12
    return photo, labels


def delta_map_from_values(values: np.ndarray) -> "DeltaMap":
    """1-row DeltaMap over explicit values (full domain)."""
    from erysegm.erythema import DeltaMap

    arr = np.asarray(values, dtype=np.float32).reshape(1, -1)
    return DeltaMap(arr, np.ones_like(arr, dtype=bool))


def planted_pair(
    size: int = 512, seed: int = 13, boost: float = 20.0
) -> tuple[RasterImage, RasterImage, np.ndarray, np.ndarray]:
    """(original, reference, planted mask, labelmap) for fidelity tests.

    The original carries red-boosted patches inside the skin region of
    ``face_fixture``; the reference is the unmodified photo.
    """
    photo, labels = face_fixture(size, seed)
    quarter = size // 4
    patches = [
        (quarter, quarter + size // 8, size // 10, size // 12),
        (size - quarter - size // 10, quarter + size // 8, size // 12, size // 10),
        (size // 2 - size // 20, size // 2 + size // 8, size // 10, size // 14),
    ]
    original, planted = plant_redness(photo, patches, boost)
    skin = labels == 1
    planted &= skin
    return original, photo, planted, labels


def lab_plane(image: RasterImage) -> np.ndarray:
    return srgb_to_lab(image).a
