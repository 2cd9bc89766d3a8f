"""Pipeline configuration: defaults, config-file loading, validation.

Precedence is CLI flags > config file > built-in defaults; merging happens
in the CLI layer, this module owns the resolved shape.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass

from .errors import ConfigError
from .erythema import (
    DEFAULT_CLOSE_RADIUS,
    DEFAULT_HIST_BINS,
    DEFAULT_K,
    DEFAULT_MIN_AREA_FRACTION,
    DEFAULT_OPEN_RADIUS,
)
from .masking import DEFAULT_EXCLUDE, DEFAULT_INCLUDE
from .registration.features import (
    DEFAULT_FAST_THRESHOLD,
    DEFAULT_MAX_KEYPOINTS,
    DEFAULT_RATIO_MAX,
)
from .registration.homography import DEFAULT_INLIER_PX, DEFAULT_MAX_ITERS
from .registration.warp import DEFAULT_MIN_COVERAGE

DEFAULT_SOURCE_PROMPT = "a photograph of a person with skin redness and rash"
DEFAULT_EDIT_PROMPT = "a photograph of a person with clear skin, no redness or rash"
DEFAULT_STEPS = 50
DEFAULT_GUIDANCE = 7.5

ADAPTER_ENV_VAR = "ERYSEGM_ADAPTER"


@dataclass
class PipelineConfig:
    input_path: str = ""
    out_dir: str = ""
    reference_path: str | None = None
    labelmask_path: str | None = None
    class_map_path: str | None = None
    no_skin_mask: bool = False
    k: float = DEFAULT_K
    ratio_max: float = DEFAULT_RATIO_MAX
    inlier_px: float = DEFAULT_INLIER_PX
    ransac_iters: int = DEFAULT_MAX_ITERS
    seed: int = 0
    max_keypoints: int = DEFAULT_MAX_KEYPOINTS
    fast_threshold: float = DEFAULT_FAST_THRESHOLD
    min_coverage: float = DEFAULT_MIN_COVERAGE
    open_radius: int = DEFAULT_OPEN_RADIUS
    close_radius: int = DEFAULT_CLOSE_RADIUS
    min_area_fraction: float = DEFAULT_MIN_AREA_FRACTION
    hist_bins: int = DEFAULT_HIST_BINS
    overlay_color: tuple[int, int, int] = (255, 0, 0)
    overlay_alpha: float = 0.4
    skin_include: tuple[str, ...] = DEFAULT_INCLUDE
    skin_exclude: tuple[str, ...] = DEFAULT_EXCLUDE
    adapter_cmd: str | None = None
    source_prompt: str = DEFAULT_SOURCE_PROMPT
    edit_prompt: str = DEFAULT_EDIT_PROMPT
    steps: int = DEFAULT_STEPS
    guidance_scale: float = DEFAULT_GUIDANCE
    adapter_seed: int = 0

    def validate(self, require_input: bool = True) -> None:
        if require_input and not self.input_path:
            raise ConfigError("input path is required")
        if not self.out_dir:
            raise ConfigError("out-dir is required")
        if not math.isfinite(self.k):
            raise ConfigError(f"k must be finite, got {self.k}")
        if not 0.0 <= self.overlay_alpha <= 1.0:
            raise ConfigError(f"overlay alpha must be in [0, 1], got {self.overlay_alpha}")
        if self.ransac_iters < 1:
            raise ConfigError("ransac-iters must be >= 1")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if self.guidance_scale < 0:
            raise ConfigError("guidance-scale must be >= 0")
        if self.open_radius < 0 or self.close_radius < 0 or self.min_area_fraction < 0:
            raise ConfigError("postprocess parameters must be >= 0")
        if not 0.0 < self.min_coverage <= 1.0:
            raise ConfigError("min-coverage must be in (0, 1]")
        if self.hist_bins < 1:
            raise ConfigError("hist-bins must be >= 1")

    def resolved_adapter_cmd(self) -> str | None:
        return self.adapter_cmd or os.environ.get(ADAPTER_ENV_VAR) or None

    def echo(self) -> dict:
        """JSON-serializable snapshot for the report's config field."""
        out = dataclasses.asdict(self)
        out["overlay_color"] = list(self.overlay_color)
        out["skin_include"] = list(self.skin_include)
        out["skin_exclude"] = list(self.skin_exclude)
        return out


def parse_color(text: str) -> tuple[int, int, int]:
    """Accept '#RRGGBB' or 'r,g,b'."""
    text = text.strip()
    try:
        if text.startswith("#"):
            if len(text) != 7:
                raise ValueError
            return tuple(int(text[i : i + 2], 16) for i in (1, 3, 5))  # type: ignore[return-value]
        parts = [int(p) for p in text.split(",")]
        if len(parts) != 3 or not all(0 <= p <= 255 for p in parts):
            raise ValueError
        return (parts[0], parts[1], parts[2])
    except ValueError:
        raise ConfigError(f"cannot parse color {text!r}: use '#RRGGBB' or 'r,g,b'") from None


def load_config_file(path: str | os.PathLike) -> dict:
    """Read a JSON config file whose keys match PipelineConfig fields."""
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    known = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"unknown config keys in {path}: {sorted(unknown)}")
    if "overlay_color" in obj and isinstance(obj["overlay_color"], str):
        obj["overlay_color"] = parse_color(obj["overlay_color"])
    for key in ("overlay_color", "skin_include", "skin_exclude"):
        if key in obj and isinstance(obj[key], list):
            obj[key] = tuple(obj[key])
    return obj
