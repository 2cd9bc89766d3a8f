"""Machine-readable run record (report.json, schema version 1).

Artifact paths are stored relative to the report's directory so two runs
of the same configuration differ only in timestamps.
"""

from __future__ import annotations

import json
import os
from datetime import datetime, timezone

SCHEMA_VERSION = 1

REPORT_FIELDS = [
    "schema_version",
    "started_at",
    "finished_at",
    "config",
    "keypoints_a",
    "keypoints_b",
    "match_count",
    "inlier_count",
    "reprojection_rmse",
    "mse_pre",
    "mse_post",
    "crop_rect",
    "homography",
    "mu",
    "sigma",
    "k",
    "tau",
    "domain_pixels",
    "mask_pixels",
    "mask_area_fraction",
    "delta_l_mean",
    "delta_b_mean",
    "artifacts",
    "adapter",
]


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def new_report(config_echo: dict, started_at: str) -> dict:
    report = {name: None for name in REPORT_FIELDS}
    report["schema_version"] = SCHEMA_VERSION
    report["started_at"] = started_at
    report["config"] = config_echo
    report["artifacts"] = {}
    return report


def attach_stats(report: dict, stats, domain_pixels: int, mask_pixels: int) -> None:
    report["mu"] = stats.mu if stats else None
    report["sigma"] = stats.sigma if stats else None
    report["k"] = stats.k if stats else None
    report["tau"] = stats.tau if stats else None
    report["domain_pixels"] = domain_pixels
    report["mask_pixels"] = mask_pixels
    report["mask_area_fraction"] = (mask_pixels / domain_pixels) if domain_pixels else None


def write_report(report: dict, out_dir: str) -> str:
    report["finished_at"] = utc_now()
    path = os.path.join(out_dir, "report.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    return path


def load_report(path: str | os.PathLike) -> dict:
    with open(os.fspath(path), encoding="utf-8") as fh:
        return json.load(fh)
