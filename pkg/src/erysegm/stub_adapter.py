"""Stand-in synthesizer adapter for CI and offline runs.

Implements the manifest contract without any model: the reference is a
PNG copy of the input and the label mask marks every pixel as skin. Run
as ``python -m erysegm.stub_adapter <manifest-path>``.

Exit codes: 1 invalid manifest, 2 model failure (never raised here), 3 io.
"""

from __future__ import annotations

import json
import os
import sys
import time

import numpy as np
from PIL import Image

from .masking import default_class_map

KNOWN_TASKS = {"synthesize", "parse_face"}


def _fail(code: int, message: str) -> int:
    print(f"stub-adapter: {message}", file=sys.stderr)
    return code


def _read_request(manifest_path: str) -> dict:
    with open(manifest_path, encoding="utf-8") as fh:
        return json.load(fh)


def _validate(request: dict) -> str | None:
    if request.get("version") != 1:
        return f"unsupported manifest version {request.get('version')!r}"
    tasks = request.get("tasks")
    if not isinstance(tasks, list) or not tasks:
        return "tasks must be a non-empty list"
    for task in tasks:
        if task not in KNOWN_TASKS:
            return f"unknown task {task!r}"
    if not isinstance(request.get("input"), str):
        return "input path missing"
    if not isinstance(request.get("out_dir"), str):
        return "out_dir missing"
    steps = request.get("steps", 1)
    if not isinstance(steps, int) or steps < 1:
        return f"steps must be an integer >= 1, got {steps!r}"
    guidance = request.get("guidance_scale", 0)
    if not isinstance(guidance, (int, float)) or guidance < 0:
        return f"guidance_scale must be >= 0, got {guidance!r}"
    return None


def run(manifest_path: str) -> int:
    started = time.monotonic()
    try:
        request = _read_request(manifest_path)
    except (OSError, json.JSONDecodeError) as exc:
        return _fail(1, f"cannot read manifest {manifest_path}: {exc}")
    problem = _validate(request)
    if problem:
        return _fail(1, problem)

    out_dir = request["out_dir"]
    tasks = request["tasks"]
    response: dict = {"version": 1, "reference": None, "labelmask": None, "class_map": None}
    try:
        os.makedirs(out_dir, exist_ok=True)
        with Image.open(request["input"]) as img:
            rgb = img.convert("RGB")
            width, height = rgb.size
            if "synthesize" in tasks:
                ref_path = os.path.join(out_dir, "reference.png")
                rgb.save(ref_path, format="PNG")
                response["reference"] = "reference.png"

        if "parse_face" in tasks:
            class_map = default_class_map()
            labels = np.full((height, width), class_map["skin"], dtype=np.uint8)
            mask_path = os.path.join(out_dir, "labelmask.png")
            Image.fromarray(labels, mode="L").save(mask_path, format="PNG")
            cmap_path = os.path.join(out_dir, "class_map.json")
            with open(cmap_path, "w", encoding="utf-8") as fh:
                json.dump({"classes": class_map}, fh, indent=2)
            response["labelmask"] = "labelmask.png"
            response["class_map"] = "class_map.json"
    except OSError as exc:
        return _fail(3, f"io failure: {exc}")

    response["model_ids"] = {"synthesis": "stub", "face_parsing": "stub"}
    response["elapsed_s"] = round(time.monotonic() - started, 3)

    # Response manifest is written last, via atomic rename.
    tmp_path = os.path.join(out_dir, ".response.json.tmp")
    final_path = os.path.join(out_dir, "response.json")
    try:
        with open(tmp_path, "w", encoding="utf-8") as fh:
            json.dump(response, fh, indent=2)
        os.replace(tmp_path, final_path)
    except OSError as exc:
        return _fail(3, f"cannot write response manifest: {exc}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    args = [a for a in args if a != "--stub"]
    if len(args) != 1:
        return _fail(1, "usage: python -m erysegm.stub_adapter <manifest-path>")
    return run(args[0])


if __name__ == "__main__":
    sys.exit(main())
