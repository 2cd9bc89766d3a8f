"""Face parsing via a pretrained semantic-segmentation checkpoint.

The checkpoint's own id2label table is translated to canonical names and
written alongside the mask, so consumers never assume a label layout.
"""

from __future__ import annotations

import json
import os

import numpy as np
from PIL import Image

from .manifest import SynthRequest

FACE_PARSING_CHECKPOINT = os.environ.get(
    "ERYSEGM_FACE_PARSING_CHECKPOINT", "jonathandinu/face-parsing"
)

# 19-class CelebAMask-HQ-style layout used by the default checkpoint.
CANONICAL_CLASSES = {
    "background": 0,
    "skin": 1,
    "nose": 2,
    "eyeglasses": 3,
    "left_eye": 4,
    "right_eye": 5,
    "left_brow": 6,
    "right_brow": 7,
    "left_ear": 8,
    "right_ear": 9,
    "mouth": 10,
    "upper_lip": 11,
    "lower_lip": 12,
    "hair": 13,
    "hat": 14,
    "earring": 15,
    "necklace": 16,
    "neck": 17,
    "clothing": 18,
}

# Short label names various face-parsing checkpoints use.
_LABEL_ALIASES = {
    "eye_g": "eyeglasses",
    "l_eye": "left_eye",
    "r_eye": "right_eye",
    "l_brow": "left_brow",
    "r_brow": "right_brow",
    "l_ear": "left_ear",
    "r_ear": "right_ear",
    "u_lip": "upper_lip",
    "l_lip": "lower_lip",
    "ear_r": "earring",
    "neck_l": "necklace",
    "cloth": "clothing",
}


class ModelUnavailableError(RuntimeError):
    """Checkpoint or inference dependency is not available."""


def canonical_name(label: str) -> str:
    label = label.strip().lower().replace(" ", "_")
    return _LABEL_ALIASES.get(label, label)


def parse_face(request: SynthRequest, out_dir: str) -> tuple[str, str, str]:
    """Run the face parser; returns (mask name, class-map name, model id).

    The label mask is a single-channel PNG at the input's resolution; the
    class map is derived from the checkpoint's id2label. An image in which
    the model finds no face simply yields background everywhere.
    """
    try:
        import torch
        from transformers import AutoImageProcessor, AutoModelForSemanticSegmentation
    except ImportError as exc:
        raise ModelUnavailableError(
            f"face parsing needs torch and transformers (install the 'models' extra): {exc}"
        ) from exc

    try:
        processor = AutoImageProcessor.from_pretrained(FACE_PARSING_CHECKPOINT)
        model = AutoModelForSemanticSegmentation.from_pretrained(FACE_PARSING_CHECKPOINT)
    except Exception as exc:
        raise ModelUnavailableError(
            f"checkpoint-unavailable: cannot load {FACE_PARSING_CHECKPOINT}: {exc}"
        ) from exc

    with Image.open(request.input_path) as img:
        rgb = img.convert("RGB")
        width, height = rgb.size
        inputs = processor(images=rgb, return_tensors="pt")

    model.eval()
    with torch.no_grad():
        logits = model(**inputs).logits
        upsampled = torch.nn.functional.interpolate(
            logits, size=(height, width), mode="bilinear", align_corners=False
        )
        labels = upsampled.argmax(dim=1)[0].to(torch.uint8).cpu().numpy()

    mask_name = "labelmask.png"
    Image.fromarray(labels, mode="L").save(os.path.join(out_dir, mask_name), format="PNG")

    id2label = getattr(model.config, "id2label", None) or {}
    classes = {canonical_name(str(name)): int(idx) for idx, name in id2label.items()}
    if not classes:
        classes = dict(CANONICAL_CLASSES)
    cmap_name = "class_map.json"
    with open(os.path.join(out_dir, cmap_name), "w", encoding="utf-8") as fh:
        json.dump({"classes": classes}, fh, indent=2)
    return mask_name, cmap_name, FACE_PARSING_CHECKPOINT


def skin_fraction(labelmask_path: str, class_map_path: str) -> float:
    """Fraction of pixels labeled skin; used by regression tests."""
    with open(class_map_path, encoding="utf-8") as fh:
        classes = json.load(fh)["classes"]
    with Image.open(labelmask_path) as img:
        labels = np.asarray(img)
    return float((labels == classes["skin"]).mean())
