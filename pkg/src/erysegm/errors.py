"""Error taxonomy shared by all pipeline stages.

Every exception carries a ``stage`` label; the CLI maps stages to stable
exit codes (config=1, io=2, adapter=3, alignment=4, masking=5,
segmentation=6).
"""

from __future__ import annotations

STAGE_EXIT_CODES = {
    "config": 1,
    "io": 2,
    "adapter": 3,
    "alignment": 4,
    "masking": 5,
    "segmentation": 6,
}


class ErysegmError(Exception):
    """Base class for all pipeline errors."""

    stage = "config"

    @property
    def exit_code(self) -> int:
        return STAGE_EXIT_CODES[self.stage]


class ConfigError(ErysegmError):
    stage = "config"


class ImageIOError(ErysegmError):
    """File missing, unsupported format, corrupt stream, or write failure."""

    stage = "io"


class AdapterError(ErysegmError):
    """Synthesizer adapter could not be run or returned an invalid result."""

    stage = "adapter"


class AlignmentError(ErysegmError):
    """Registration failure: detection, matching, RANSAC, warp, or crop."""

    stage = "alignment"


class MaskingError(ErysegmError):
    """Label-map ingestion or mask derivation failure."""

    stage = "masking"


class SegmentationError(ErysegmError):
    """Delta/threshold stage failure (dimension mismatch, empty domain)."""

    stage = "segmentation"
