"""Face-parsing label maps, skin-mask derivation, and binary-mask algebra.

Binary masks are plain (H, W) bool arrays. The default class table follows
the 19-class CelebAMask-HQ-style labeling of the external face-parsing
model, shipped as ``data/face_parsing_classes.json`` rather than hardcoded.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from importlib import resources

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import MaskingError
from .imaging import CropRect

DEFAULT_INCLUDE = ("skin",)
DEFAULT_EXCLUDE = ("nose", "upper_lip", "lower_lip")

# Fraction of pixels allowed to carry ids absent from the class map.
DEFAULT_UNKNOWN_LIMIT = 0.01


@dataclass(frozen=True)
class LabelMask:
    """Per-pixel class ids with the name→id table they were produced under."""

    labels: np.ndarray
    class_map: dict[str, int]

    def __post_init__(self) -> None:
        if self.labels.ndim != 2:
            raise ValueError("LabelMask labels must be (H, W)")

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]


def default_class_map() -> dict[str, int]:
    """Class table shipped with the package (face-parsing model labeling)."""
    text = resources.files("erysegm.data").joinpath("face_parsing_classes.json").read_text()
    return _parse_class_map_obj(json.loads(text), "<packaged face_parsing_classes.json>")


def _parse_class_map_obj(obj: object, origin: str) -> dict[str, int]:
    if not isinstance(obj, dict) or not isinstance(obj.get("classes"), dict):
        raise MaskingError(f'invalid class map {origin}: need {{"classes": {{name: id}}}}')
    classes = {}
    for name, cid in obj["classes"].items():
        if not isinstance(cid, int) or cid < 0:
            raise MaskingError(f"invalid class map {origin}: id for {name!r} must be a non-negative int")
        classes[str(name)] = cid
    return classes


def load_class_map(path: str | os.PathLike) -> dict[str, int]:
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except FileNotFoundError as exc:
        raise MaskingError(f"class map not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise MaskingError(f"class map {path} is not valid JSON: {exc}") from exc
    return _parse_class_map_obj(obj, path)


def load_label_mask(
    path: str | os.PathLike,
    class_map: dict[str, int],
    unknown_limit: float = DEFAULT_UNKNOWN_LIMIT,
) -> LabelMask:
    """Read a single-channel PNG whose pixel values are class ids."""
    path = os.fspath(path)
    if not os.path.exists(path):
        raise MaskingError(f"file-not-found: {path}")
    try:
        with Image.open(path) as img:
            if img.mode != "L":
                raise MaskingError(f"not-single-channel: {path} has mode {img.mode}")
            labels = np.asarray(img, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise MaskingError(f"corrupt-stream: {path}") from exc
    known = np.isin(labels, np.array(sorted(class_map.values()), dtype=np.uint8))
    unknown_fraction = 1.0 - known.mean()
    if unknown_fraction > unknown_limit:
        raise MaskingError(
            f"unknown-id-fraction: {unknown_fraction:.4f} of pixels in {path} carry ids "
            f"absent from the class map (limit {unknown_limit})"
        )
    return LabelMask(labels, dict(class_map))


def select_skin(
    mask: LabelMask,
    include: tuple[str, ...] = DEFAULT_INCLUDE,
    exclude: tuple[str, ...] = DEFAULT_EXCLUDE,
) -> np.ndarray:
    """True where the pixel class is in ``include`` and not in ``exclude``."""
    for name in tuple(include) + tuple(exclude):
        if name not in mask.class_map:
            raise MaskingError(f"unknown-class-name: {name!r} not in class map")
    include_ids = [mask.class_map[n] for n in include]
    exclude_ids = [mask.class_map[n] for n in exclude]
    out = np.isin(mask.labels, include_ids)
    if exclude_ids:
        out &= ~np.isin(mask.labels, exclude_ids)
    return out


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise MaskingError(f"dimension-mismatch: {a.shape} vs {b.shape}")


def mask_and(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _check_same_shape(a, b)
    return a & b


def mask_or(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _check_same_shape(a, b)
    return a | b


def mask_not(a: np.ndarray) -> np.ndarray:
    return ~a


def disc_offsets(radius: int) -> np.ndarray:
    """(N, 2) array of (dy, dx) offsets with Euclidean distance <= radius."""
    r = int(radius)
    dy, dx = np.mgrid[-r : r + 1, -r : r + 1]
    keep = dy * dy + dx * dx <= r * r
    return np.stack([dy[keep], dx[keep]], axis=1)


def _dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    # Out-of-image neighbors count as false.
    r = int(radius)
    h, w = mask.shape
    padded = np.zeros((h + 2 * r, w + 2 * r), dtype=bool)
    padded[r : r + h, r : r + w] = mask
    out = np.zeros_like(mask)
    for dy, dx in disc_offsets(r):
        out |= padded[r + dy : r + dy + h, r + dx : r + dx + w]
    return out


def _erode(mask: np.ndarray, radius: int, border: bool) -> np.ndarray:
    r = int(radius)
    h, w = mask.shape
    padded = np.full((h + 2 * r, w + 2 * r), border, dtype=bool)
    padded[r : r + h, r : r + w] = mask
    out = np.ones_like(mask)
    for dy, dx in disc_offsets(r):
        out &= padded[r + dy : r + dy + h, r + dx : r + dx + w]
    return out


def morph_open(mask: np.ndarray, radius: int) -> np.ndarray:
    """Erosion then dilation with a disc element; radius 0 is identity."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0:
        return mask.copy()
    return _dilate(_erode(mask, radius, border=False), radius)


def morph_close(mask: np.ndarray, radius: int) -> np.ndarray:
    """Dilation then erosion with a disc element; radius 0 is identity.

    The erosion step treats out-of-image pixels as true so closing never
    removes mask pixels at the image border (keeps m ⊆ close(m)).
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0:
        return mask.copy()
    return _erode(_dilate(mask, radius), radius, border=True)


def crop_mask(mask: np.ndarray, rect: CropRect) -> np.ndarray:
    h, w = mask.shape
    if rect.x < 0 or rect.y < 0 or rect.width < 1 or rect.height < 1:
        raise MaskingError(f"out-of-bounds rectangle: {rect}")
    if rect.x + rect.width > w or rect.y + rect.height > h:
        raise MaskingError(f"out-of-bounds rectangle: {rect} on {h}x{w} mask")
    return mask[rect.y : rect.y + rect.height, rect.x : rect.x + rect.width].copy()


def mask_to_u8(mask: np.ndarray) -> np.ndarray:
    """0/255 uint8 rendering of a boolean mask (for PNG artifacts)."""
    return np.where(mask, 255, 0).astype(np.uint8)
