"""Service configuration."""

from __future__ import annotations

import importlib
from dataclasses import dataclass, field

# Describer question templates (configuration, not contract): the three
# questions sent to a vision-language model in full mode. Word caps are
# stated in the prompt but are still enforced client-side.
DEFAULT_DESCRIBE_PROMPTS = (
    "List the three most salient items in this image. Name each in at most "
    "3 words.",
    "For each named item, describe its shape, color, or state in at most "
    "10 words.",
    "Describe the whole image in about 50 words.",
)


class ServiceConfigError(ValueError):
    """Configuration or model-availability failure at startup."""


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    mode: str = "stub"  # "stub" | "full"
    seed: int = 0
    # full mode: "package.module:factory" returning a model-set object
    models: str = ""
    device: str = "cpu"
    describer_model: str = ""
    embedder_model: str = ""
    codec_model: str = ""
    diffuser_model: str = ""
    describe_prompts: tuple[str, str, str] = field(default=DEFAULT_DESCRIBE_PROMPTS)

    def validate(self) -> None:
        if self.mode not in ("stub", "full"):
            raise ServiceConfigError(f"unknown mode {self.mode!r}")
        if self.mode == "full" and not self.models:
            raise ServiceConfigError(
                "full mode needs --models package.module:factory; this build "
                "ships no bundled model weights")


def load_model_set(config: ServiceConfig):
    """Import and build the full-mode model set, validating availability.

    The factory receives the config and must return an object implementing
    describe/embed_image/embed_text/diffuse/codec_encode/codec_decode/metrics
    with the stub's signatures.
    """
    config.validate()
    try:
        module_name, _, factory_name = config.models.partition(":")
        module = importlib.import_module(module_name)
        factory = getattr(module, factory_name or "build")
    except (ImportError, AttributeError, ValueError) as exc:
        raise ServiceConfigError(f"cannot load model set {config.models!r}: {exc}") from exc
    return factory(config)
