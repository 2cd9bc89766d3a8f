"""Reference synthesizer adapter: diffusion editing + face parsing behind
a JSON manifest contract, with a model-free stub mode for CI."""

from .manifest import (
    MANIFEST_VERSION,
    ManifestError,
    SynthRequest,
    SynthResponse,
    load_request,
    parse_request,
    write_response,
)

__version__ = "0.1.0"

__all__ = [
    "MANIFEST_VERSION",
    "ManifestError",
    "SynthRequest",
    "SynthResponse",
    "load_request",
    "parse_request",
    "write_response",
    "__version__",
]
