"""Invocation of the external reference synthesizer over the manifest contract.

The adapter is any executable invoked as ``<adapter-cmd> <manifest-path>``.
It reads a request manifest (JSON) and must write ``response.json`` into
the request's out_dir, only after every referenced output file exists.
"""

from __future__ import annotations

import json
import os
import shlex
import subprocess
import time
from dataclasses import dataclass

from .config import ADAPTER_ENV_VAR, PipelineConfig
from .errors import AdapterError

MANIFEST_VERSION = 1
REQUEST_NAME = "request.json"
RESPONSE_NAME = "response.json"


@dataclass
class AdapterOutputs:
    reference_path: str | None
    labelmask_path: str | None
    class_map_path: str | None
    provenance: dict


def build_request(config: PipelineConfig, input_path: str, out_dir: str, tasks: list[str]) -> dict:
    return {
        "version": MANIFEST_VERSION,
        "input": os.path.abspath(input_path),
        "tasks": list(tasks),
        "source_prompt": config.source_prompt,
        "edit_prompt": config.edit_prompt,
        "steps": config.steps,
        "guidance_scale": config.guidance_scale,
        "seed": config.adapter_seed,
        "out_dir": os.path.abspath(out_dir),
    }


def _validate_response(resp: dict, tasks: list[str], adapter_dir: str) -> AdapterOutputs:
    if resp.get("version") != MANIFEST_VERSION:
        raise AdapterError(f"manifest-invalid: response version {resp.get('version')!r}, expected 1")

    def resolve(key: str, required: bool) -> str | None:
        value = resp.get(key)
        if value is None:
            if required:
                raise AdapterError(f"manifest-invalid: response lacks {key!r}")
            return None
        path = value if os.path.isabs(value) else os.path.join(adapter_dir, value)
        if not os.path.exists(path):
            raise AdapterError(f"output-missing: {key} file {path} does not exist")
        return path

    reference = resolve("reference", required="synthesize" in tasks)
    parse_requested = "parse_face" in tasks
    labelmask = resolve("labelmask", required=parse_requested)
    class_map = resolve("class_map", required=parse_requested)
    provenance = {
        "model_ids": resp.get("model_ids", {}),
        "elapsed_s": resp.get("elapsed_s"),
    }
    return AdapterOutputs(reference, labelmask, class_map, provenance)


def invoke_synthesizer(
    config: PipelineConfig, input_path: str, out_dir: str, tasks: list[str] | None = None
) -> AdapterOutputs:
    """Run the adapter subprocess and validate its response manifest."""
    cmd = config.resolved_adapter_cmd()
    if not cmd:
        raise AdapterError(
            f"adapter-not-found: no adapter command configured (set --adapter-cmd or ${ADAPTER_ENV_VAR})"
        )
    if tasks is None:
        tasks = ["synthesize"] if (config.labelmask_path or config.no_skin_mask) else [
            "synthesize",
            "parse_face",
        ]

    adapter_dir = os.path.join(out_dir, "adapter")
    os.makedirs(adapter_dir, exist_ok=True)
    request = build_request(config, input_path, adapter_dir, tasks)
    manifest_path = os.path.join(adapter_dir, REQUEST_NAME)
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(request, fh, indent=2)

    argv = shlex.split(cmd) + [manifest_path]
    started = time.monotonic()
    try:
        proc = subprocess.run(argv, capture_output=True, text=True)
    except FileNotFoundError as exc:
        raise AdapterError(f"adapter-not-found: cannot execute {argv[0]!r}") from exc
    if proc.returncode != 0:
        stderr = (proc.stderr or "").strip()
        raise AdapterError(
            f"adapter-nonzero-exit: {argv[0]} exited {proc.returncode}; stderr: {stderr[-2000:]}"
        )

    response_path = os.path.join(adapter_dir, RESPONSE_NAME)
    if not os.path.exists(response_path):
        raise AdapterError(f"manifest-invalid: adapter wrote no {RESPONSE_NAME} in {adapter_dir}")
    try:
        with open(response_path, encoding="utf-8") as fh:
            resp = json.load(fh)
    except json.JSONDecodeError as exc:
        raise AdapterError(f"manifest-invalid: {response_path} is not valid JSON: {exc}") from exc

    outputs = _validate_response(resp, tasks, adapter_dir)
    outputs.provenance.update(
        {
            "command": cmd,
            "tasks": tasks,
            "source_prompt": config.source_prompt,
            "edit_prompt": config.edit_prompt,
            "steps": config.steps,
            "guidance_scale": config.guidance_scale,
            "seed": config.adapter_seed,
            "wall_s": round(time.monotonic() - started, 3),
        }
    )
    return outputs
