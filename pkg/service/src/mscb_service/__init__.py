"""Model service package: HTTP endpoints wrapping describer, embedder,
codec, restorer, and metric roles, with a deterministic stub mode."""

from .app import StubModels, create_app
from .config import ServiceConfig, ServiceConfigError, load_model_set

__version__ = "0.1.0"

__all__ = ["StubModels", "ServiceConfig", "ServiceConfigError", "create_app",
           "load_model_set"]
