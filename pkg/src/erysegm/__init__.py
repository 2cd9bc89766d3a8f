"""Zero-shot skin erythema segmentation via synthesized healthy references.

Pipeline: align a generatively produced erythema-free reference to the
original photo, gate the comparison to skin pixels, and flag pixels whose
CIELAB a* difference exceeds mu + k*sigma.
"""

from .erythema import DeltaMap, DeltaStats, delta_a, delta_stats, threshold_mask
from .errors import (
    AdapterError,
    AlignmentError,
    ConfigError,
    ErysegmError,
    ImageIOError,
    MaskingError,
    SegmentationError,
)
from .imaging import (
    CropRect,
    GrayImage,
    LabImage,
    RasterImage,
    encode_png,
    load_image,
    mse,
    srgb_to_lab,
    to_grayscale,
)
from .masking import LabelMask, load_label_mask, select_skin
from .registration import AlignmentResult, align

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AdapterError",
    "AlignmentError",
    "AlignmentResult",
    "ConfigError",
    "CropRect",
    "DeltaMap",
    "DeltaStats",
    "ErysegmError",
    "GrayImage",
    "ImageIOError",
    "LabImage",
    "LabelMask",
    "MaskingError",
    "RasterImage",
    "SegmentationError",
    "align",
    "delta_a",
    "delta_stats",
    "encode_png",
    "load_image",
    "load_label_mask",
    "mse",
    "select_skin",
    "srgb_to_lab",
    "threshold_mask",
    "to_grayscale",
]
