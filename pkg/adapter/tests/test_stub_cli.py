"""Stub mode through the real CLI: full contract without any model."""

from __future__ import annotations

import json

import numpy as np
import pytest
from PIL import Image

from erysegm_adapter.cli import main

REQUIRED_CLASS_NAMES = ("skin", "nose", "upper_lip", "lower_lip", "hair", "background")


@pytest.fixture()
def request_on_disk(tmp_path):
    rng = np.random.default_rng(3)
    pixels = rng.integers(0, 256, size=(48, 64, 3), dtype=np.uint8)
    input_path = tmp_path / "input.png"
    Image.fromarray(pixels).save(input_path)
    out_dir = tmp_path / "out"
    out_dir.mkdir()
    manifest = {
        "version": 1,
        "input": str(input_path),
        "tasks": ["synthesize", "parse_face"],
        "source_prompt": "src",
        "edit_prompt": "edit",
        "steps": 50,
        "guidance_scale": 7.5,
        "seed": 0,
        "out_dir": str(out_dir),
    }
    manifest_path = tmp_path / "request.json"
    manifest_path.write_text(json.dumps(manifest))
    return manifest_path, out_dir, pixels


class TestStubRun:
    def test_both_tasks(self, request_on_disk):
        manifest_path, out_dir, pixels = request_on_disk
        assert main(["--stub", str(manifest_path)]) == 0

        response = json.loads((out_dir / "response.json").read_text())
        assert response["version"] == 1
        assert response["model_ids"] == {"synthesis": "stub", "face_parsing": "stub"}

        with Image.open(out_dir / response["reference"]) as ref:
            assert ref.mode == "RGB"
            assert np.array_equal(np.asarray(ref), pixels)
        with Image.open(out_dir / response["labelmask"]) as mask:
            assert mask.mode == "L"
            assert mask.size == (64, 48)  # input resolution
            labels = np.asarray(mask)
        classes = json.loads((out_dir / response["class_map"]).read_text())["classes"]
        assert np.all(labels == classes["skin"])

    def test_class_map_names_all_required_classes(self, request_on_disk):
        manifest_path, out_dir, _ = request_on_disk
        assert main(["--stub", str(manifest_path)]) == 0
        response = json.loads((out_dir / "response.json").read_text())
        classes = json.loads((out_dir / response["class_map"]).read_text())["classes"]
        for name in REQUIRED_CLASS_NAMES:
            assert name in classes, name

    def test_synthesize_only(self, request_on_disk, tmp_path):
        manifest_path, out_dir, _ = request_on_disk
        manifest = json.loads(manifest_path.read_text())
        manifest["tasks"] = ["synthesize"]
        manifest_path.write_text(json.dumps(manifest))
        assert main(["--stub", str(manifest_path)]) == 0
        response = json.loads((out_dir / "response.json").read_text())
        assert response["reference"] == "reference.png"
        assert response["labelmask"] is None

    def test_response_written_last(self, request_on_disk):
        # Everything the response references must exist the moment the
        # response does; with atomic rename there is no partial state.
        manifest_path, out_dir, _ = request_on_disk
        assert main(["--stub", str(manifest_path)]) == 0
        response = json.loads((out_dir / "response.json").read_text())
        for key in ("reference", "labelmask", "class_map"):
            assert (out_dir / response[key]).exists()
        assert not any(p.name.endswith(".tmp") for p in out_dir.iterdir())


class TestCliErrors:
    def test_malformed_manifest_exit_1(self, tmp_path, capsys):
        bad = tmp_path / "req.json"
        bad.write_text("{nope")
        assert main(["--stub", str(bad)]) == 1
        assert "JSON" in capsys.readouterr().err

    def test_unknown_task_exit_1(self, tmp_path, capsys):
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
        assert main(["--stub", str(req)]) == 1
        assert "hallucinate" in capsys.readouterr().err

    def test_zero_steps_exit_1(self, tmp_path):
        req = tmp_path / "req.json"
        req.write_text(
            json.dumps(
                {
                    "version": 1,
                    "input": "x.png",
                    "tasks": ["synthesize"],
                    "steps": 0,
                    "out_dir": str(tmp_path),
                }
            )
        )
        assert main(["--stub", str(req)]) == 1

    def test_missing_input_file_exit_3(self, tmp_path):
        req = tmp_path / "req.json"
        req.write_text(
            json.dumps(
                {
                    "version": 1,
                    "input": str(tmp_path / "ghost.png"),
                    "tasks": ["synthesize"],
                    "out_dir": str(tmp_path),
                }
            )
        )
        assert main(["--stub", str(req)]) == 3

    def test_no_arguments_exit_1(self, capsys):
        assert main([]) == 1
        assert "usage" in capsys.readouterr().err

    def test_models_unavailable_exit_2(self, request_on_disk):
        # Without the 'models' extra installed, real-mode runs must fail
        # with the model-failure code, not crash.
        try:
            import diffusers  # noqa: F401

            pytest.skip("diffusers installed; real mode may attempt downloads")
        except ImportError:
            pass
        manifest_path, _, _ = request_on_disk
        assert main([str(manifest_path)]) == 2
