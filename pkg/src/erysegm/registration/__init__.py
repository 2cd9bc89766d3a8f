"""Feature-based registration of the synthesized reference to the original."""

from .align import AlignmentResult, align
from .features import (
    KEYPOINT_MARGIN,
    Keypoint,
    Match,
    compute_descriptors,
    detect_keypoints,
    match_descriptors,
)
from .homography import (
    estimate_homography_dlt,
    normalize_homography,
    project_points,
    ransac_homography,
    reprojection_rmse,
)
from .warp import central_crop, resize_bilinear, warp_to

__all__ = [
    "AlignmentResult",
    "align",
    "KEYPOINT_MARGIN",
    "Keypoint",
    "Match",
    "compute_descriptors",
    "detect_keypoints",
    "match_descriptors",
    "estimate_homography_dlt",
    "normalize_homography",
    "project_points",
    "ransac_homography",
    "reprojection_rmse",
    "central_crop",
    "resize_bilinear",
    "warp_to",
]
