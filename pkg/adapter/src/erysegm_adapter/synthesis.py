"""Counterfactual reference synthesis via edit-friendly diffusion inversion.

Wraps a pretrained latent-diffusion editing pipeline: the input photo is
inverted into the model's noise space under a prompt describing it (with
its pathology), then regenerated under a prompt that removes the redness.
The inversion math itself lives in the underlying pipeline; this module
only drives it and records provenance.
"""

from __future__ import annotations

import os

from PIL import Image

from .face_parsing import ModelUnavailableError
from .manifest import SynthRequest

DIFFUSION_CHECKPOINT = os.environ.get(
    "ERYSEGM_DIFFUSION_CHECKPOINT", "stable-diffusion-v1-5/stable-diffusion-v1-5"
)

# Fraction of the inverted noise sequence replayed during the edit pass;
# the underlying pipeline's convention (1.0 would re-noise from scratch).
EDIT_SKIP = 0.15

_PIPELINE_CACHE: dict[str, object] = {}


def _load_pipeline():
    try:
        import torch
        from diffusers import LEditsPPPipelineStableDiffusion
    except ImportError as exc:
        raise ModelUnavailableError(
            f"synthesis needs torch and diffusers (install the 'models' extra): {exc}"
        ) from exc

    if DIFFUSION_CHECKPOINT not in _PIPELINE_CACHE:
        try:
            pipe = LEditsPPPipelineStableDiffusion.from_pretrained(
                DIFFUSION_CHECKPOINT, safety_checker=None, requires_safety_checker=False
            )
        except Exception as exc:
            raise ModelUnavailableError(
                f"checkpoint-unavailable: cannot load {DIFFUSION_CHECKPOINT}: {exc}"
            ) from exc
        device = "cuda" if torch.cuda.is_available() else "cpu"
        _PIPELINE_CACHE[DIFFUSION_CHECKPOINT] = pipe.to(device)
    return _PIPELINE_CACHE[DIFFUSION_CHECKPOINT]


def invert_and_edit(request: SynthRequest, out_dir: str) -> tuple[str, str]:
    """Produce the erythema-free reference; returns (file name, model id).

    Deterministic for a fixed (seed, checkpoint, request) on one backend:
    the inversion and the edit pass share one seeded generator.
    """
    import torch  # guarded by _load_pipeline's import check

    pipe = _load_pipeline()
    with Image.open(request.input_path) as img:
        source = img.convert("RGB")

    generator = torch.Generator(device="cpu").manual_seed(request.seed)
    try:
        pipe.invert(
            image=source,
            source_prompt=request.source_prompt,
            source_guidance_scale=request.guidance_scale,
            num_inversion_steps=request.steps,
            skip=EDIT_SKIP,
            generator=generator,
        )
        result = pipe(
            editing_prompt=[request.edit_prompt],
            edit_guidance_scale=request.guidance_scale,
            generator=generator,
        )
    except ModelUnavailableError:
        raise
    except Exception as exc:
        raise RuntimeError(f"inference-failure: {exc}") from exc

    reference = result.images[0]
    out_name = "reference.png"
    reference.save(os.path.join(out_dir, out_name), format="PNG")
    return out_name, DIFFUSION_CHECKPOINT
