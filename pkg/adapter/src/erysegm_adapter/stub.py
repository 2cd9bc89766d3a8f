"""Model-free task implementations for CI and offline runs."""

from __future__ import annotations

import json
import os

import numpy as np
from PIL import Image

from .face_parsing import CANONICAL_CLASSES


def stub_synthesize(input_path: str, out_dir: str) -> str:
    """Reference = PNG copy of the input (no edit applied)."""
    with Image.open(input_path) as img:
        rgb = img.convert("RGB")
        out_name = "reference.png"
        rgb.save(os.path.join(out_dir, out_name), format="PNG")
    return out_name


def stub_parse_face(input_path: str, out_dir: str) -> tuple[str, str]:
    """All-skin label mask at input resolution plus the canonical table."""
    with Image.open(input_path) as img:
        width, height = img.size
    labels = np.full((height, width), CANONICAL_CLASSES["skin"], dtype=np.uint8)
    mask_name = "labelmask.png"
    Image.fromarray(labels, mode="L").save(os.path.join(out_dir, mask_name), format="PNG")
    cmap_name = "class_map.json"
    with open(os.path.join(out_dir, cmap_name), "w", encoding="utf-8") as fh:
        json.dump({"classes": dict(CANONICAL_CLASSES)}, fh, indent=2)
    return mask_name, cmap_name
