"""CLI orchestration: subcommands, exit codes, reports, adapter contract."""

from __future__ import annotations

import json
import os
import sys

import numpy as np
import pytest
from PIL import Image

from erysegm.cli import main
from erysegm.imaging import encode_png
from erysegm.report import load_report

from .fixtures import face_fixture, planted_pair

STUB_ADAPTER = f"{sys.executable} -m erysegm.stub_adapter"


@pytest.fixture(scope="module")
def portrait(tmp_path_factory):
    """Photo + all-skin-compatible label map on disk (256px for speed)."""
    root = tmp_path_factory.mktemp("portrait")
    photo, labels = face_fixture(size=256, seed=61)
    input_path = root / "input.png"
    label_path = root / "labels.png"
    encode_png(photo, input_path)
    Image.fromarray(labels, mode="L").save(label_path)
    return {"input": str(input_path), "labels": str(label_path), "dir": root}


def _read_report(out_dir) -> dict:
    return load_report(os.path.join(out_dir, "report.json"))


class TestPipelineCommand:
    def test_reference_equals_input(self, portrait, tmp_path, capsys):
        out = tmp_path / "run"
        code = main(
            [
                "pipeline",
                "--input", portrait["input"],
                "--reference", portrait["input"],
                "--labelmask", portrait["labels"],
                "--out-dir", str(out),
            ]
        )
        assert code == 0
        report = _read_report(out)
        assert report["schema_version"] == 1
        assert report["mask_pixels"] == 0  # no difference exists
        assert report["mse_post"] == pytest.approx(0.0, abs=1e-9)
        for name in (
            "reference.png",
            "aligned.png",
            "valid_mask.png",
            "skin_mask.png",
            "delta_a_heatmap.png",
            "histogram.csv",
            "histogram.png",
            "erythema_mask.png",
            "overlay.png",
            "report.json",
        ):
            assert (out / name).exists(), name

    def test_missing_reference_no_adapter_exits_1(self, portrait, tmp_path, capsys):
        env_backup = os.environ.pop("ERYSEGM_ADAPTER", None)
        try:
            code = main(
                [
                    "pipeline",
                    "--input", portrait["input"],
                    "--labelmask", portrait["labels"],
                    "--out-dir", str(tmp_path / "r"),
                ]
            )
        finally:
            if env_backup is not None:
                os.environ["ERYSEGM_ADAPTER"] = env_backup
        assert code == 1
        assert "missing reference" in capsys.readouterr().err

    def test_report_invariants(self, portrait, tmp_path):
        out = tmp_path / "run"
        main(
            [
                "pipeline",
                "--input", portrait["input"],
                "--reference", portrait["input"],
                "--labelmask", portrait["labels"],
                "--out-dir", str(out),
            ]
        )
        report = _read_report(out)
        assert report["mask_pixels"] <= report["domain_pixels"]
        assert report["mask_area_fraction"] == pytest.approx(
            report["mask_pixels"] / report["domain_pixels"]
        )
        assert report["inlier_count"] <= report["match_count"]

    def test_unknown_flag_exits_1(self, capsys):
        assert main(["pipeline", "--frobnicate"]) == 1

    def test_unknown_subcommand_exits_1(self, capsys):
        assert main(["explode"]) == 1


class TestSegmentCommand:
    def test_mismatched_sizes_exit_6(self, portrait, tmp_path, capsys):
        small = tmp_path / "small.png"
        Image.open(portrait["input"]).resize((64, 64)).save(small)
        code = main(
            [
                "segment",
                "--input", portrait["input"],
                "--reference", str(small),
                "--no-skin-mask",
                "--out-dir", str(tmp_path / "o"),
            ]
        )
        assert code == 6
        assert "dimension-mismatch" in capsys.readouterr().err

    def test_planted_patch_detected(self, tmp_path):
        original, reference, planted, labels = planted_pair(size=256, seed=62)
        orig_path = tmp_path / "orig.png"
        ref_path = tmp_path / "ref.png"
        label_path = tmp_path / "labels.png"
        encode_png(original, orig_path)
        encode_png(reference, ref_path)
        Image.fromarray(labels, mode="L").save(label_path)
        out = tmp_path / "seg"
        code = main(
            [
                "segment",
                "--input", str(orig_path),
                "--reference", str(ref_path),
                "--labelmask", str(label_path),
                "--out-dir", str(out),
            ]
        )
        assert code == 0
        mask = np.asarray(Image.open(out / "erythema_mask.png")) > 0
        inter = (mask & planted).sum()
        union = (mask | planted).sum()
        assert inter / union >= 0.9


class TestHistogramCommand:
    def test_rethreshold_monotonicity(self, tmp_path):
        original, reference, _, labels = planted_pair(size=256, seed=63)
        orig_path = tmp_path / "orig.png"
        ref_path = tmp_path / "ref.png"
        label_path = tmp_path / "labels.png"
        encode_png(original, orig_path)
        encode_png(reference, ref_path)
        Image.fromarray(labels, mode="L").save(label_path)
        run = tmp_path / "run"
        assert (
            main(
                [
                    "segment",
                    "--input", str(orig_path),
                    "--reference", str(ref_path),
                    "--labelmask", str(label_path),
                    "--k", "1.5",
                    "--out-dir", str(run),
                ]
            )
            == 0
        )
        base = _read_report(run)

        redo = tmp_path / "redo"
        assert (
            main(["histogram", "--run-dir", str(run), "--k", "2.0", "--out-dir", str(redo)]) == 0
        )
        rethresholded = _read_report(redo)
        assert rethresholded["k"] == 2.0
        assert rethresholded["mask_pixels"] <= base["mask_pixels"]
        assert (redo / "histogram.csv").exists()
        assert (redo / "overlay.png").exists()

    def test_missing_run_dir_exits_1(self, tmp_path, capsys):
        assert main(["histogram", "--run-dir", str(tmp_path), "--k", "2.0"]) == 1


class TestAdapterContract:
    def test_real_adapter_package_in_stub_mode(self, portrait, tmp_path):
        # Cross-package integration: drive the separately shipped adapter
        # through the manifest contract, no code-level coupling.
        import shutil

        adapter_bin = shutil.which("erysegm-adapter")
        if adapter_bin is None:
            pytest.skip("erysegm-adapter package not installed")
        out = tmp_path / "run"
        code = main(
            [
                "pipeline",
                "--input", portrait["input"],
                "--adapter-cmd", f"{adapter_bin} --stub",
                "--out-dir", str(out),
            ]
        )
        assert code == 0
        report = _read_report(out)
        assert report["adapter"]["model_ids"] == {"synthesis": "stub", "face_parsing": "stub"}
        assert report["mask_pixels"] == 0

    def test_stub_adapter_happy_path(self, portrait, tmp_path):
        out = tmp_path / "run"
        code = main(
            [
                "pipeline",
                "--input", portrait["input"],
                "--adapter-cmd", STUB_ADAPTER,
                "--out-dir", str(out),
            ]
        )
        assert code == 0
        report = _read_report(out)
        assert report["adapter"]["model_ids"] == {"synthesis": "stub", "face_parsing": "stub"}
        assert report["mask_pixels"] == 0  # stub reference is a copy of the input
        assert (out / "adapter" / "request.json").exists()
        assert (out / "adapter" / "response.json").exists()

    def test_adapter_env_var(self, portrait, tmp_path, monkeypatch):
        monkeypatch.setenv("ERYSEGM_ADAPTER", STUB_ADAPTER)
        out = tmp_path / "run"
        assert (
            main(["pipeline", "--input", portrait["input"], "--out-dir", str(out)]) == 0
        )

    def test_adapter_nonzero_exit_is_code_3(self, portrait, tmp_path, capsys):
        code = main(
            [
                "pipeline",
                "--input", portrait["input"],
                "--adapter-cmd", f"{sys.executable} -c 'import sys; sys.exit(1)'",
                "--out-dir", str(tmp_path / "x"),
            ]
        )
        assert code == 3
        assert "adapter" in capsys.readouterr().err

    def test_adapter_not_found_is_code_3(self, portrait, tmp_path):
        code = main(
            [
                "pipeline",
                "--input", portrait["input"],
                "--adapter-cmd", "definitely-not-a-real-binary-xyz",
                "--out-dir", str(tmp_path / "x"),
            ]
        )
        assert code == 3

    def test_adapter_missing_output_is_code_3(self, portrait, tmp_path, capsys):
        # An adapter that writes a response manifest pointing at nothing.
        script = (
            "import json, sys, os\n"
            "req = json.load(open(sys.argv[1]))\n"
            "resp = {'version': 1, 'reference': 'ghost.png', 'labelmask': None, 'class_map': None}\n"
            "open(os.path.join(req['out_dir'], 'response.json'), 'w').write(json.dumps(resp))\n"
        )
        script_path = tmp_path / "bad_adapter.py"
        script_path.write_text(script)
        code = main(
            [
                "pipeline",
                "--input", portrait["input"],
                "--no-skin-mask",
                "--adapter-cmd", f"{sys.executable} {script_path}",
                "--out-dir", str(tmp_path / "x"),
            ]
        )
        assert code == 3

    def test_stub_rejects_malformed_manifest(self, tmp_path):
        from erysegm.stub_adapter import main as stub_main

        bad = tmp_path / "req.json"
        bad.write_text("{not json")
        assert stub_main([str(bad)]) == 1

    def test_stub_rejects_unknown_task(self, tmp_path, capsys):
        from erysegm.stub_adapter import main as stub_main

        req = tmp_path / "req.json"
        req.write_text(
            json.dumps(
                {
                    "version": 1,
                    "input": "x.png",
                    "tasks": ["hallucinate"],
                    "out_dir": str(tmp_path),
                }
            )
        )
        assert stub_main([str(req)]) == 1
        assert "hallucinate" in capsys.readouterr().err


class TestSynthCommand:
    def test_synth_only(self, portrait, tmp_path):
        out = tmp_path / "synth"
        code = main(
            [
                "synth",
                "--input", portrait["input"],
                "--adapter-cmd", STUB_ADAPTER,
                "--out-dir", str(out),
            ]
        )
        assert code == 0
        report = _read_report(out)
        assert (out / report["artifacts"]["reference"]).exists()
        assert (out / report["artifacts"]["labelmask"]).exists()
        assert report["adapter"]["seed"] == 0


class TestConfigFile:
    def test_cli_overrides_config_file(self, portrait, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"k": 3.0, "hist_bins": 16}))
        out = tmp_path / "run"
        code = main(
            [
                "pipeline",
                "--config", str(cfg),
                "--input", portrait["input"],
                "--reference", portrait["input"],
                "--labelmask", portrait["labels"],
                "--k", "1.5",
                "--out-dir", str(out),
            ]
        )
        assert code == 0
        report = _read_report(out)
        assert report["config"]["k"] == 1.5  # CLI wins
        assert report["config"]["hist_bins"] == 16  # file beats default

    def test_unknown_config_key_exits_1(self, portrait, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"nope": 1}))
        assert (
            main(
                [
                    "pipeline",
                    "--config", str(cfg),
                    "--input", portrait["input"],
                    "--out-dir", str(tmp_path / "o"),
                ]
            )
            == 1
        )


class TestDeterminism:
    def test_two_runs_byte_identical_artifacts(self, tmp_path):
        original, reference, _, labels = planted_pair(size=256, seed=64)
        orig_path = tmp_path / "orig.png"
        ref_path = tmp_path / "ref.png"
        label_path = tmp_path / "labels.png"
        encode_png(original, orig_path)
        encode_png(reference, ref_path)
        Image.fromarray(labels, mode="L").save(label_path)

        outs = []
        for name in ("one", "two"):
            out = tmp_path / name
            args = [
                "pipeline",
                "--input", str(orig_path),
                "--reference", str(ref_path),
                "--labelmask", str(label_path),
                "--seed", "5",
                "--out-dir", str(out),
            ]
            assert main(args) == 0
            outs.append(out)

        pngs = sorted(p.name for p in outs[0].glob("*.png"))
        assert pngs
        for name in pngs:
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name

        r1, r2 = _read_report(outs[0]), _read_report(outs[1])
        for r in (r1, r2):
            r.pop("started_at")
            r.pop("finished_at")
            r["config"].pop("out_dir")
        assert r1 == r2
