"""Command-line interface.

Subcommands: pipeline (full run), align, segment, synth, histogram.
Stage errors exit with stable codes: 1 config, 2 io, 3 adapter,
4 alignment, 5 masking, 6 segmentation.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import PipelineConfig, load_config_file, parse_color
from .errors import ErysegmError
from .pipeline import run_align, run_histogram, run_pipeline, run_segment, run_synth


class _Parser(argparse.ArgumentParser):
    # Spec: unknown flags/subcommands print usage and exit 1, not argparse's 2.
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; CLI flags override its values")
    p.add_argument("--input", help="input photo (PNG or JPEG)")
    p.add_argument("--out-dir", help="directory for artifacts and report.json")
    p.add_argument("--seed", type=int, help="RANSAC seed (default 0)")


def _add_reference_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--reference", help="erythema-free reference image")
    p.add_argument("--labelmask", help="face-parsing label map (single-channel PNG)")
    p.add_argument("--class-map", help="JSON class table for the label map")
    p.add_argument(
        "--no-skin-mask",
        action="store_const",
        const=True,
        help="analyze every aligned pixel instead of the skin region",
    )


def _add_align_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ratio-max", type=float, help="Lowe ratio-test cutoff (default 0.75)")
    p.add_argument("--inlier-px", type=float, help="RANSAC inlier radius in px (default 3.0)")
    p.add_argument("--ransac-iters", type=int, help="RANSAC iterations (default 2000)")
    p.add_argument("--max-keypoints", type=int, help="keypoint budget per image (default 2000)")
    p.add_argument("--fast-threshold", type=float, help="corner contrast threshold (default 20)")
    p.add_argument("--min-coverage", type=float, help="central-crop coverage (default 0.999)")


def _add_segment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=float, help="threshold multiplier tau = mu + k*sigma (default 1.5)")
    p.add_argument("--open-radius", type=int, help="morphological opening radius (default 1)")
    p.add_argument("--close-radius", type=int, help="morphological closing radius (default 2)")
    p.add_argument(
        "--min-area-fraction",
        type=float,
        help="drop components smaller than this fraction of the domain (default 0.0005)",
    )
    p.add_argument("--hist-bins", type=int, help="histogram bin count (default 64)")
    p.add_argument("--overlay-color", help="overlay color, '#RRGGBB' or 'r,g,b' (default #FF0000)")
    p.add_argument("--overlay-alpha", type=float, help="overlay opacity in [0,1] (default 0.4)")


def _add_adapter_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--adapter-cmd", help="synthesizer adapter command (or $ERYSEGM_ADAPTER)")
    p.add_argument("--source-prompt", help="prompt describing the input including the pathology")
    p.add_argument("--edit-prompt", help="prompt describing the pathology-free edit")
    p.add_argument("--steps", type=int, help="denoising steps (default 50)")
    p.add_argument("--guidance-scale", type=float, help="classifier-free guidance (default 7.5)")
    p.add_argument("--adapter-seed", type=int, help="seed passed to the adapter (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="erysegm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_pipe = sub.add_parser("pipeline", help="full run: synth if needed, align, mask, segment")
    _add_common_flags(p_pipe)
    _add_reference_flags(p_pipe)
    _add_align_flags(p_pipe)
    _add_segment_flags(p_pipe)
    _add_adapter_flags(p_pipe)

    p_align = sub.add_parser("align", help="registration only")
    _add_common_flags(p_align)
    p_align.add_argument("--reference", help="reference image to align onto the input")
    _add_align_flags(p_align)

    p_seg = sub.add_parser("segment", help="segment a pre-aligned pair")
    _add_common_flags(p_seg)
    _add_reference_flags(p_seg)
    _add_segment_flags(p_seg)

    p_synth = sub.add_parser("synth", help="invoke the synthesizer adapter only")
    _add_common_flags(p_synth)
    p_synth.add_argument(
        "--no-skin-mask", action="store_const", const=True, help="skip the parse_face task"
    )
    _add_adapter_flags(p_synth)

    p_hist = sub.add_parser("histogram", help="re-threshold a stored delta map for a new k")
    _add_common_flags(p_hist)
    p_hist.add_argument("--run-dir", help="out-dir of a previous pipeline/segment run")
    _add_segment_flags(p_hist)

    return parser


_FLAG_TO_FIELD = {
    "input": "input_path",
    "reference": "reference_path",
    "labelmask": "labelmask_path",
    "class_map": "class_map_path",
}


def _build_config(args: argparse.Namespace) -> PipelineConfig:
    values: dict = {}
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))
    field_names = {f.name for f in dataclasses.fields(PipelineConfig)}
    for key, value in vars(args).items():
        if key in ("command", "config", "run_dir") or value is None:
            continue
        name = _FLAG_TO_FIELD.get(key, key)
        if name == "overlay_color":
            value = parse_color(value)
        if name in field_names:
            values[name] = value
    return PipelineConfig(**values)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        config = _build_config(args)
        if args.command == "pipeline":
            report = run_pipeline(config)
        elif args.command == "align":
            report = run_align(config)
        elif args.command == "segment":
            report = run_segment(config)
        elif args.command == "synth":
            report = run_synth(config)
        else:  # histogram
            run_dir = args.run_dir or config.out_dir
            if getattr(args, "out_dir", None) is None and args.run_dir:
                config.out_dir = args.run_dir
            report = run_histogram(config, run_dir)
    except ErysegmError as exc:
        print(f"error [{exc.stage}]: {exc}", file=sys.stderr)
        return exc.exit_code

    mask_px = report.get("mask_pixels")
    frac = report.get("mask_area_fraction")
    if mask_px is not None and frac is not None:
        print(f"erythema pixels: {mask_px} ({frac:.2%} of analysis domain)")
    print(f"report: {config.out_dir}/report.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
