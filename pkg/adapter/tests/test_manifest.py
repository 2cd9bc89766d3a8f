"""Manifest contract: parsing, validation, atomic response publishing."""

from __future__ import annotations

import json

import pytest

from erysegm_adapter.manifest import (
    ManifestError,
    SynthResponse,
    load_request,
    parse_request,
    write_response,
)


def _request_dict(**overrides) -> dict:
    base = {
        "version": 1,
        "input": "/tmp/input.png",
        "tasks": ["synthesize", "parse_face"],
        "source_prompt": "a photograph of a person with skin redness",
        "edit_prompt": "a photograph of a person with clear skin, no redness or rash",
        "steps": 50,
        "guidance_scale": 7.5,
        "seed": 42,
        "out_dir": "/tmp/out",
    }
    base.update(overrides)
    return base


class TestParseRequest:
    def test_roundtrip(self):
        req = parse_request(_request_dict())
        assert req.input_path == "/tmp/input.png"
        assert req.tasks == ["synthesize", "parse_face"]
        assert req.steps == 50
        assert req.guidance_scale == 7.5
        assert req.seed == 42

    def test_wrong_version(self):
        with pytest.raises(ManifestError, match="version"):
            parse_request(_request_dict(version=2))

    def test_unknown_task(self):
        with pytest.raises(ManifestError, match="hallucinate"):
            parse_request(_request_dict(tasks=["hallucinate"]))

    def test_empty_tasks(self):
        with pytest.raises(ManifestError, match="non-empty"):
            parse_request(_request_dict(tasks=[]))

    def test_zero_steps_rejected(self):
        with pytest.raises(ManifestError, match="steps"):
            parse_request(_request_dict(steps=0))

    def test_negative_guidance_rejected(self):
        with pytest.raises(ManifestError, match="guidance"):
            parse_request(_request_dict(guidance_scale=-1.0))

    def test_missing_input(self):
        with pytest.raises(ManifestError, match="input"):
            parse_request(_request_dict(input=""))

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "req.json"
        path.write_text(json.dumps(_request_dict()))
        req = load_request(path)
        assert req.out_dir == "/tmp/out"

    def test_load_malformed_json(self, tmp_path):
        path = tmp_path / "req.json"
        path.write_text("{broken")
        with pytest.raises(ManifestError, match="not valid JSON"):
            load_request(path)


class TestWriteResponse:
    def test_refuses_missing_outputs(self, tmp_path):
        resp = SynthResponse(reference="reference.png")
        with pytest.raises(ManifestError, match="missing file"):
            write_response(resp, str(tmp_path))

    def test_publishes_after_outputs_exist(self, tmp_path):
        (tmp_path / "reference.png").write_bytes(b"x")
        resp = SynthResponse(reference="reference.png", model_ids={"synthesis": "stub"})
        path = write_response(resp, str(tmp_path))
        data = json.loads((tmp_path / "response.json").read_text())
        assert path.endswith("response.json")
        assert data["version"] == 1
        assert data["reference"] == "reference.png"
        assert data["model_ids"] == {"synthesis": "stub"}
        assert not (tmp_path / ".response.json.tmp").exists()
