"""Adapter entry point.

Usage: ``erysegm-adapter [--stub] <request-manifest-path>``

Exit codes: 0 success, 1 invalid manifest, 2 model failure, 3 io error.
"""

from __future__ import annotations

import sys
import time

from . import face_parsing, stub, synthesis
from .manifest import ManifestError, SynthResponse, load_request, write_response


def run(manifest_path: str, use_stub: bool) -> int:
    started = time.monotonic()
    try:
        request = load_request(manifest_path)
    except ManifestError as exc:
        print(f"erysegm-adapter: {exc}", file=sys.stderr)
        return 1

    response = SynthResponse()
    try:
        import os

        os.makedirs(request.out_dir, exist_ok=True)
        if "synthesize" in request.tasks:
            if use_stub:
                response.reference = stub.stub_synthesize(request.input_path, request.out_dir)
                response.model_ids["synthesis"] = "stub"
            else:
                response.reference, model_id = synthesis.invert_and_edit(
                    request, request.out_dir
                )
                response.model_ids["synthesis"] = model_id
        if "parse_face" in request.tasks:
            if use_stub:
                response.labelmask, response.class_map = stub.stub_parse_face(
                    request.input_path, request.out_dir
                )
                response.model_ids["face_parsing"] = "stub"
            else:
                response.labelmask, response.class_map, model_id = face_parsing.parse_face(
                    request, request.out_dir
                )
                response.model_ids["face_parsing"] = model_id
    except face_parsing.ModelUnavailableError as exc:
        print(f"erysegm-adapter: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"erysegm-adapter: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"erysegm-adapter: io failure: {exc}", file=sys.stderr)
        return 3

    response.elapsed_s = round(time.monotonic() - started, 3)
    try:
        write_response(response, request.out_dir)
    except (ManifestError, OSError) as exc:
        print(f"erysegm-adapter: cannot publish response: {exc}", file=sys.stderr)
        return 3
    return 0


def main(argv: list[str] | None = None) -> int:
    args = list(sys.argv[1:] if argv is None else argv)
    use_stub = "--stub" in args
    args = [a for a in args if a != "--stub"]
    if len(args) != 1:
        print("usage: erysegm-adapter [--stub] <request-manifest-path>", file=sys.stderr)
        return 1
    code = run(args[0], use_stub)
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
