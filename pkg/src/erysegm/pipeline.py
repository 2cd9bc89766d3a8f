"""Pipeline orchestration for the CLI subcommands.

Artifact names under out_dir are fixed so downstream scripts can rely on
them: reference.png, aligned.png, valid_mask.png, input_cropped.png,
skin_mask.png, delta_a_heatmap.png, histogram.csv, histogram.png,
erythema_mask.png, overlay.png, delta_a.npz, report.json.
"""

from __future__ import annotations

import os

import numpy as np

from . import erythema, masking
from .adapter import AdapterOutputs, invoke_synthesizer
from .config import PipelineConfig
from .errors import ConfigError, SegmentationError
from .imaging import (
    CropRect,
    RasterImage,
    encode_gray_png,
    encode_png,
    load_image,
    srgb_to_lab,
)
from .masking import crop_mask, mask_to_u8
from .registration import AlignmentResult, align
from .registration.align import AlignParams
from .report import attach_stats, new_report, utc_now, write_report

DELTA_ARCHIVE = "delta_a.npz"


def _ensure_out_dir(out_dir: str) -> None:
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"out-dir not creatable: {out_dir}: {exc}") from exc


def _align_params(config: PipelineConfig) -> AlignParams:
    return AlignParams(
        ratio_max=config.ratio_max,
        inlier_px=config.inlier_px,
        max_iters=config.ransac_iters,
        seed=config.seed,
        max_keypoints=config.max_keypoints,
        fast_threshold=config.fast_threshold,
        min_coverage=config.min_coverage,
    )


def _resolve_class_map(config: PipelineConfig, adapter_out: AdapterOutputs | None) -> dict[str, int]:
    if config.class_map_path:
        return masking.load_class_map(config.class_map_path)
    if adapter_out and adapter_out.class_map_path:
        return masking.load_class_map(adapter_out.class_map_path)
    return masking.default_class_map()


def _skin_mask(
    config: PipelineConfig,
    shape: tuple[int, int],
    labelmask_path: str | None,
    class_map: dict[str, int],
) -> np.ndarray:
    if config.no_skin_mask or labelmask_path is None:
        return np.ones(shape, dtype=bool)
    label_mask = masking.load_label_mask(labelmask_path, class_map)
    if (label_mask.height, label_mask.width) != shape:
        raise SegmentationError(
            f"dimension-mismatch: label mask {(label_mask.height, label_mask.width)} "
            f"vs image {shape}"
        )
    return masking.select_skin(label_mask, config.skin_include, config.skin_exclude)


def _attach_alignment(report: dict, result: AlignmentResult) -> None:
    report["keypoints_a"] = result.keypoints_a
    report["keypoints_b"] = result.keypoints_b
    report["match_count"] = result.match_count
    report["inlier_count"] = result.inlier_count
    report["reprojection_rmse"] = result.reprojection_rmse
    report["mse_pre"] = result.mse_pre
    report["mse_post"] = result.mse_post
    report["crop_rect"] = list(result.crop_rect)
    report["homography"] = [[float(v) for v in row] for row in result.homography]


def _segment_and_render(
    report: dict,
    out_dir: str,
    original: RasterImage,
    reference_aligned: RasterImage,
    domain: np.ndarray,
    config: PipelineConfig,
) -> dict:
    """Shared tail: ΔA statistics, threshold, cleanup, artifacts."""
    lab_orig = srgb_to_lab(original)
    lab_ref = srgb_to_lab(reference_aligned)
    dmap = erythema.delta_a(lab_orig, lab_ref, domain)

    domain_pixels = int(np.count_nonzero(domain))
    artifacts = report["artifacts"]

    if domain_pixels == 0:
        # Empty skin/valid domain is a legal no-lesion outcome, not an error.
        final = np.zeros(domain.shape, dtype=bool)
        stats = None
    else:
        stats = erythema.delta_stats(dmap, config.k)
        raw = erythema.threshold_mask(dmap, stats)
        min_area = int(round(config.min_area_fraction * domain_pixels))
        final = erythema.postprocess(raw, config.open_radius, config.close_radius, min_area)
        final &= domain

        hist = erythema.histogram(dmap, stats, config.hist_bins)
        erythema.histogram_to_csv(hist, os.path.join(out_dir, "histogram.csv"))
        encode_png(erythema.render_histogram_chart(hist), os.path.join(out_dir, "histogram.png"))
        artifacts["histogram_csv"] = "histogram.csv"
        artifacts["histogram_png"] = "histogram.png"

    if not bool(np.all(final <= domain)):
        raise SegmentationError("internal: erythema mask escaped the analysis domain")

    mask_pixels = int(np.count_nonzero(final))
    attach_stats(report, stats, domain_pixels, mask_pixels)
    if domain_pixels:
        report["delta_l_mean"] = float((lab_orig.L[domain] - lab_ref.L[domain]).mean())
        report["delta_b_mean"] = float((lab_orig.b[domain] - lab_ref.b[domain]).mean())

    encode_png(erythema.render_heatmap(dmap), os.path.join(out_dir, "delta_a_heatmap.png"))
    encode_gray_png(mask_to_u8(final), os.path.join(out_dir, "erythema_mask.png"))
    overlay = erythema.render_overlay(original, final, config.overlay_color, config.overlay_alpha)
    encode_png(overlay, os.path.join(out_dir, "overlay.png"))
    encode_png(original, os.path.join(out_dir, "input_cropped.png"))
    np.savez_compressed(
        os.path.join(out_dir, DELTA_ARCHIVE), delta_a=dmap.delta_a, domain=dmap.domain
    )
    artifacts.update(
        {
            "delta_a_heatmap": "delta_a_heatmap.png",
            "erythema_mask": "erythema_mask.png",
            "overlay": "overlay.png",
            "input_cropped": "input_cropped.png",
            "delta_a": DELTA_ARCHIVE,
        }
    )
    return report


def run_pipeline(config: PipelineConfig) -> dict:
    """Full run: synth (if needed) → align → mask → segment → artifacts."""
    config.validate()
    _ensure_out_dir(config.out_dir)
    report = new_report(config.echo(), utc_now())
    out_dir = config.out_dir

    original = load_image(config.input_path)

    adapter_out: AdapterOutputs | None = None
    reference_path = config.reference_path
    labelmask_path = config.labelmask_path
    need_labelmask = not config.no_skin_mask and labelmask_path is None
    if reference_path is None or need_labelmask:
        if config.resolved_adapter_cmd() is None:
            missing = "reference" if reference_path is None else "label mask"
            raise ConfigError(
                f"missing {missing}: pass --reference/--labelmask (or --no-skin-mask), "
                "or configure an adapter command"
            )
        tasks = []
        if reference_path is None:
            tasks.append("synthesize")
        if need_labelmask:
            tasks.append("parse_face")
        adapter_out = invoke_synthesizer(config, config.input_path, out_dir, tasks)
        if reference_path is None:
            reference_path = adapter_out.reference_path
        if need_labelmask:
            labelmask_path = adapter_out.labelmask_path
        report["adapter"] = adapter_out.provenance

    reference = load_image(reference_path)
    encode_png(reference, os.path.join(out_dir, "reference.png"))
    report["artifacts"]["reference"] = "reference.png"

    result = align(original, reference, _align_params(config))
    _attach_alignment(report, result)
    encode_png(result.warped_reference, os.path.join(out_dir, "aligned.png"))
    encode_gray_png(mask_to_u8(result.valid_mask), os.path.join(out_dir, "valid_mask.png"))
    report["artifacts"]["aligned"] = "aligned.png"
    report["artifacts"]["valid_mask"] = "valid_mask.png"

    class_map = _resolve_class_map(config, adapter_out)
    skin_full = _skin_mask(
        config, (original.height, original.width), labelmask_path, class_map
    )
    skin = crop_mask(skin_full, result.crop_rect)
    encode_gray_png(mask_to_u8(skin), os.path.join(out_dir, "skin_mask.png"))
    report["artifacts"]["skin_mask"] = "skin_mask.png"

    domain = skin & result.valid_cropped
    _segment_and_render(
        report, out_dir, result.original_cropped, result.warped_cropped, domain, config
    )
    report["artifacts"]["report"] = "report.json"
    write_report(report, out_dir)
    return report


def run_align(config: PipelineConfig) -> dict:
    """Registration only: warped reference + alignment report."""
    config.validate()
    if config.reference_path is None:
        raise ConfigError("align requires --reference")
    _ensure_out_dir(config.out_dir)
    report = new_report(config.echo(), utc_now())

    original = load_image(config.input_path)
    reference = load_image(config.reference_path)
    encode_png(reference, os.path.join(config.out_dir, "reference.png"))

    result = align(original, reference, _align_params(config))
    _attach_alignment(report, result)
    encode_png(result.warped_reference, os.path.join(config.out_dir, "aligned.png"))
    encode_gray_png(mask_to_u8(result.valid_mask), os.path.join(config.out_dir, "valid_mask.png"))
    encode_png(result.original_cropped, os.path.join(config.out_dir, "input_cropped.png"))
    report["artifacts"].update(
        {
            "reference": "reference.png",
            "aligned": "aligned.png",
            "valid_mask": "valid_mask.png",
            "input_cropped": "input_cropped.png",
            "report": "report.json",
        }
    )
    write_report(report, config.out_dir)
    return report


def run_segment(config: PipelineConfig) -> dict:
    """Segmentation on an already-aligned pair (no registration)."""
    config.validate()
    if config.reference_path is None:
        raise ConfigError("segment requires --reference (the pre-aligned reference)")
    _ensure_out_dir(config.out_dir)
    report = new_report(config.echo(), utc_now())

    if config.labelmask_path is None and not config.no_skin_mask:
        raise ConfigError("segment requires --labelmask or an explicit --no-skin-mask")

    original = load_image(config.input_path)
    reference = load_image(config.reference_path)
    if original.pixels.shape != reference.pixels.shape:
        raise SegmentationError(
            f"dimension-mismatch: input {original.pixels.shape} vs reference "
            f"{reference.pixels.shape}; segment expects a pre-aligned pair"
        )
    encode_png(reference, os.path.join(config.out_dir, "reference.png"))
    report["artifacts"]["reference"] = "reference.png"
    report["crop_rect"] = [0, 0, original.width, original.height]

    class_map = _resolve_class_map(config, None)
    skin = _skin_mask(config, (original.height, original.width), config.labelmask_path, class_map)
    encode_gray_png(mask_to_u8(skin), os.path.join(config.out_dir, "skin_mask.png"))
    report["artifacts"]["skin_mask"] = "skin_mask.png"

    _segment_and_render(report, config.out_dir, original, reference, skin, config)
    report["artifacts"]["report"] = "report.json"
    write_report(report, config.out_dir)
    return report


def run_synth(config: PipelineConfig) -> dict:
    """Adapter invocation only."""
    config.validate()
    _ensure_out_dir(config.out_dir)
    report = new_report(config.echo(), utc_now())
    tasks = ["synthesize"] if config.no_skin_mask else ["synthesize", "parse_face"]
    adapter_out = invoke_synthesizer(config, config.input_path, config.out_dir, tasks)
    report["adapter"] = adapter_out.provenance
    report["artifacts"] = {
        "reference": os.path.relpath(adapter_out.reference_path, config.out_dir),
    }
    if adapter_out.labelmask_path:
        report["artifacts"]["labelmask"] = os.path.relpath(
            adapter_out.labelmask_path, config.out_dir
        )
    if adapter_out.class_map_path:
        report["artifacts"]["class_map"] = os.path.relpath(
            adapter_out.class_map_path, config.out_dir
        )
    write_report(report, config.out_dir)
    return report


def run_histogram(config: PipelineConfig, run_dir: str) -> dict:
    """Re-threshold a stored ΔA map for a new k without re-aligning."""
    config.validate(require_input=False)
    archive = os.path.join(run_dir, DELTA_ARCHIVE)
    if not os.path.exists(archive):
        raise ConfigError(f"no stored delta map: {archive} (run `pipeline` or `segment` first)")
    data = np.load(archive)
    dmap = erythema.DeltaMap(data["delta_a"], data["domain"].astype(bool))

    _ensure_out_dir(config.out_dir)
    report = new_report(config.echo(), utc_now())

    domain_pixels = int(np.count_nonzero(dmap.domain))
    if domain_pixels == 0:
        raise SegmentationError("empty-domain: stored delta map has no domain pixels")
    stats = erythema.delta_stats(dmap, config.k)
    raw = erythema.threshold_mask(dmap, stats)
    min_area = int(round(config.min_area_fraction * domain_pixels))
    final = erythema.postprocess(raw, config.open_radius, config.close_radius, min_area)
    final &= dmap.domain

    hist = erythema.histogram(dmap, stats, config.hist_bins)
    erythema.histogram_to_csv(hist, os.path.join(config.out_dir, "histogram.csv"))
    encode_png(erythema.render_histogram_chart(hist), os.path.join(config.out_dir, "histogram.png"))
    encode_gray_png(mask_to_u8(final), os.path.join(config.out_dir, "erythema_mask.png"))
    encode_png(erythema.render_heatmap(dmap), os.path.join(config.out_dir, "delta_a_heatmap.png"))
    report["artifacts"].update(
        {
            "histogram_csv": "histogram.csv",
            "histogram_png": "histogram.png",
            "erythema_mask": "erythema_mask.png",
            "delta_a_heatmap": "delta_a_heatmap.png",
        }
    )

    cropped_path = os.path.join(run_dir, "input_cropped.png")
    if os.path.exists(cropped_path):
        original = load_image(cropped_path)
        if original.pixels.shape[:2] == final.shape:
            overlay = erythema.render_overlay(
                original, final, config.overlay_color, config.overlay_alpha
            )
            encode_png(overlay, os.path.join(config.out_dir, "overlay.png"))
            report["artifacts"]["overlay"] = "overlay.png"

    attach_stats(report, stats, domain_pixels, int(np.count_nonzero(final)))
    report["artifacts"]["report"] = "report.json"
    write_report(report, config.out_dir)
    return report
