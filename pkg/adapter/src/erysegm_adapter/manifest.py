"""Request/response manifest contract.

Invocation protocol: ``erysegm-adapter [--stub] <request-manifest-path>``.
The adapter writes its outputs plus ``response.json`` into the request's
out_dir; the response manifest is written last, via atomic rename, so its
presence guarantees every referenced file exists.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

MANIFEST_VERSION = 1
RESPONSE_NAME = "response.json"
KNOWN_TASKS = ("synthesize", "parse_face")

DEFAULT_STEPS = 50


class ManifestError(ValueError):
    """Request manifest malformed or violating the contract."""


@dataclass
class SynthRequest:
    input_path: str
    out_dir: str
    tasks: list[str]
    source_prompt: str = ""
    edit_prompt: str = ""
    steps: int = DEFAULT_STEPS
    guidance_scale: float = 7.5
    seed: int = 0

    def validate(self) -> None:
        if not self.tasks:
            raise ManifestError("tasks must be a non-empty list")
        for task in self.tasks:
            if task not in KNOWN_TASKS:
                raise ManifestError(f"unknown task {task!r} (known: {', '.join(KNOWN_TASKS)})")
        if self.steps < 1:
            raise ManifestError(f"steps must be >= 1, got {self.steps}")
        if self.guidance_scale < 0:
            raise ManifestError(f"guidance_scale must be >= 0, got {self.guidance_scale}")
        if not self.input_path:
            raise ManifestError("input path missing")
        if not self.out_dir:
            raise ManifestError("out_dir missing")


@dataclass
class SynthResponse:
    reference: str | None = None
    labelmask: str | None = None
    class_map: str | None = None
    model_ids: dict[str, str] = field(default_factory=dict)
    elapsed_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "version": MANIFEST_VERSION,
            "reference": self.reference,
            "labelmask": self.labelmask,
            "class_map": self.class_map,
            "model_ids": self.model_ids,
            "elapsed_s": self.elapsed_s,
        }


def parse_request(obj: dict) -> SynthRequest:
    if not isinstance(obj, dict):
        raise ManifestError("request manifest must be a JSON object")
    if obj.get("version") != MANIFEST_VERSION:
        raise ManifestError(f"unsupported manifest version {obj.get('version')!r}, expected 1")
    tasks = obj.get("tasks")
    if not isinstance(tasks, list):
        raise ManifestError("tasks must be a list")
    try:
        request = SynthRequest(
            input_path=str(obj.get("input") or ""),
            out_dir=str(obj.get("out_dir") or ""),
            tasks=[str(t) for t in tasks],
            source_prompt=str(obj.get("source_prompt") or ""),
            edit_prompt=str(obj.get("edit_prompt") or ""),
            steps=int(obj.get("steps", DEFAULT_STEPS)),
            guidance_scale=float(obj.get("guidance_scale", 7.5)),
            seed=int(obj.get("seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise ManifestError(f"malformed field in request manifest: {exc}") from exc
    request.validate()
    return request


def load_request(path: str | os.PathLike) -> SynthRequest:
    try:
        with open(os.fspath(path), encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {path} is not valid JSON: {exc}") from exc
    return parse_request(obj)


def write_response(response: SynthResponse, out_dir: str) -> str:
    """Atomically publish the response manifest after all outputs exist."""
    for key in ("reference", "labelmask", "class_map"):
        rel = getattr(response, key)
        if rel is not None and not os.path.exists(os.path.join(out_dir, rel)):
            raise ManifestError(f"response references missing file: {rel}")
    tmp = os.path.join(out_dir, f".{RESPONSE_NAME}.tmp")
    final = os.path.join(out_dir, RESPONSE_NAME)
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(response.to_dict(), fh, indent=2)
        fh.write("\n")
    os.replace(tmp, final)
    return final
