"""End-to-end registration: detect, describe, match, RANSAC, warp, crop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import AlignmentError
from ..imaging import CropRect, RasterImage, mse, to_grayscale
from .features import (
    DEFAULT_FAST_THRESHOLD,
    DEFAULT_MAX_KEYPOINTS,
    DEFAULT_RATIO_MAX,
    compute_descriptors,
    detect_keypoints,
    match_descriptors,
)
from .homography import (
    DEFAULT_INLIER_PX,
    DEFAULT_MAX_ITERS,
    ransac_homography,
    reprojection_rmse,
)
from .warp import DEFAULT_MIN_COVERAGE, central_crop, resize_bilinear, warp_to


@dataclass(frozen=True)
class AlignParams:
    ratio_max: float = DEFAULT_RATIO_MAX
    inlier_px: float = DEFAULT_INLIER_PX
    max_iters: int = DEFAULT_MAX_ITERS
    seed: int = 0
    max_keypoints: int = DEFAULT_MAX_KEYPOINTS
    fast_threshold: float = DEFAULT_FAST_THRESHOLD
    min_coverage: float = DEFAULT_MIN_COVERAGE


@dataclass
class AlignmentResult:
    """Registered pair plus the quantities the report needs.

    ``homography`` maps reference coordinates onto the original's pixel
    grid; keypoints_a counts detections on the original, keypoints_b on
    the reference.
    """

    homography: np.ndarray
    warped_reference: RasterImage
    valid_mask: np.ndarray
    inlier_count: int
    match_count: int
    keypoints_a: int
    keypoints_b: int
    reprojection_rmse: float
    mse_pre: float
    mse_post: float
    crop_rect: CropRect
    original_cropped: RasterImage = field(repr=False, default=None)
    warped_cropped: RasterImage = field(repr=False, default=None)
    valid_cropped: np.ndarray = field(repr=False, default=None)

    def __post_init__(self) -> None:
        if self.inlier_count > self.match_count:
            raise ValueError("inlier_count cannot exceed match_count")


def align(
    original: RasterImage,
    reference: RasterImage,
    params: AlignParams | None = None,
) -> AlignmentResult:
    """Align ``reference`` onto ``original`` and crop to the overlap.

    mse_pre compares the original against the reference naively resized
    to the original's dimensions; mse_post compares against the warped
    reference inside the valid region of the central crop.
    """
    p = params or AlignParams()

    gray_orig = to_grayscale(original)
    gray_ref = to_grayscale(reference)
    kp_orig = detect_keypoints(gray_orig, p.max_keypoints, p.fast_threshold)
    kp_ref = detect_keypoints(gray_ref, p.max_keypoints, p.fast_threshold)
    if not kp_orig or not kp_ref:
        raise AlignmentError(
            "alignment-failed: no keypoints detected "
            f"(original: {len(kp_orig)}, reference: {len(kp_ref)})"
        )

    desc_ref, surv_ref = compute_descriptors(gray_ref, kp_ref)
    desc_orig, surv_orig = compute_descriptors(gray_orig, kp_orig)
    kp_ref_s = [kp_ref[i] for i in surv_ref]
    kp_orig_s = [kp_orig[i] for i in surv_orig]

    try:
        matches = match_descriptors(desc_ref, desc_orig, p.ratio_max)
        homography, inlier_idx = ransac_homography(
            matches, kp_ref_s, kp_orig_s, p.inlier_px, p.max_iters, p.seed
        )
    except AlignmentError as exc:
        raise AlignmentError(f"alignment-failed: {exc}") from exc

    rmse = reprojection_rmse(homography, matches, kp_ref_s, kp_orig_s, inlier_idx)

    warped, valid = warp_to(reference, homography, original.width, original.height)
    orig_c, warp_c, valid_c, rect = central_crop(original, warped, valid, p.min_coverage)

    naive = resize_bilinear(reference, original.width, original.height)
    mse_pre = mse(original, naive)
    mse_post = mse(orig_c, warp_c, valid_c)

    return AlignmentResult(
        homography=homography,
        warped_reference=warped,
        valid_mask=valid,
        inlier_count=len(inlier_idx),
        match_count=len(matches),
        keypoints_a=len(kp_orig),
        keypoints_b=len(kp_ref),
        reprojection_rmse=rmse,
        mse_pre=mse_pre,
        mse_post=mse_post,
        crop_rect=rect,
        original_cropped=orig_c,
        warped_cropped=warp_c,
        valid_cropped=valid_c,
    )
