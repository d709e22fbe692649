"""HTTP service exposing the model roles behind the compression toolkit.

JSON bodies, base64 PNG images, base64 float32 little-endian tensors.
Malformed requests get a structured 4xx body: {"error": {"code", "message"}}.
Stub mode is bit-deterministic per request bytes; every response is a pure
function of (request, configured seed).
"""

from __future__ import annotations

import base64

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import rules
from .config import ServiceConfig, load_model_set


class BadInput(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class StubModels:
    """Deterministic model set mirroring the client's in-process mock."""

    mode = "stub"

    def __init__(self, seed: int):
        self.seed = seed

    def describe(self, image):
        return rules.describe(image, self.seed)

    def embed_image(self, image):
        return rules.embed_image(image, self.seed), (rules.GRID, rules.GRID), rules.CHANNELS

    def embed_text(self, text):
        return rules.embed_text(text, self.seed), (1, 1), rules.CHANNELS

    def diffuse(self, image, prompt, steps):
        return rules.diffuse(image, prompt, steps)

    def codec_encode(self, image, quality):
        return rules.codec_encode(image, quality)

    def codec_decode(self, blob):
        try:
            return rules.codec_decode(blob)
        except rules.CodecFormatError as exc:
            raise BadInput("bad-payload", str(exc)) from exc

    def metrics(self, image, reference):
        return rules.metrics(image, reference)


class DescribeRequest(BaseModel):
    image: str


class EmbedImageRequest(BaseModel):
    image: str


class EmbedTextRequest(BaseModel):
    text: str


class DiffuseRequest(BaseModel):
    image: str
    prompt: str
    steps: int = Field(ge=1)


class CodecEncodeRequest(BaseModel):
    image: str
    quality: int = Field(ge=1, le=8)


class CodecDecodeRequest(BaseModel):
    payload: str


class MetricsRequest(BaseModel):
    image: str
    reference: str


def _unb64(text: str, what: str) -> bytes:
    try:
        return base64.b64decode(text, validate=True)
    except Exception as exc:
        raise BadInput("bad-base64", f"{what} is not valid base64") from exc


def _decode_image(text: str, what: str) -> np.ndarray:
    data = _unb64(text, what)
    try:
        return rules.decode_png(data)
    except Exception as exc:
        raise BadInput("bad-image", f"{what} is not a decodable image") from exc


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _tensor_response(values: np.ndarray, kind: str, grid, channels) -> dict:
    data = values.astype("<f4").tobytes()
    return {"kind": kind, "grid": [grid[0], grid[1]], "channels": channels,
            "dtype": "float32", "data": _b64(data)}


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    config.validate()
    models = StubModels(config.seed) if config.mode == "stub" else load_model_set(config)

    app = FastAPI(title="mscb model service", version="0.1.0")

    @app.exception_handler(BadInput)
    async def bad_input_handler(request: Request, exc: BadInput):
        return JSONResponse(status_code=400,
                            content={"error": {"code": exc.code, "message": str(exc)}})

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"error": {"code": "bad-request",
                                               "message": str(exc.errors())}})

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "mode": config.mode}

    @app.post("/v1/describe")
    def describe(req: DescribeRequest):
        image = _decode_image(req.image, "image")
        return models.describe(image)

    @app.post("/v1/embed/image")
    def embed_image(req: EmbedImageRequest):
        image = _decode_image(req.image, "image")
        values, grid, channels = models.embed_image(image)
        return _tensor_response(values, "image", grid, channels)

    @app.post("/v1/embed/text")
    def embed_text(req: EmbedTextRequest):
        values, grid, channels = models.embed_text(req.text)
        return _tensor_response(values, "text", grid, channels)

    @app.post("/v1/diffuse")
    def diffuse(req: DiffuseRequest):
        image = _decode_image(req.image, "image")
        out = models.diffuse(image, req.prompt, req.steps)
        return {"image": _b64(rules.encode_png(out))}

    @app.post("/v1/codec/encode")
    def codec_encode(req: CodecEncodeRequest):
        image = _decode_image(req.image, "image")
        return {"payload": _b64(models.codec_encode(image, req.quality))}

    @app.post("/v1/codec/decode")
    def codec_decode(req: CodecDecodeRequest):
        blob = _unb64(req.payload, "payload")
        out = models.codec_decode(blob)
        return {"image": _b64(rules.encode_png(out))}

    @app.post("/v1/metrics")
    def metrics(req: MetricsRequest):
        image = _decode_image(req.image, "image")
        reference = _decode_image(req.reference, "reference")
        if image.shape != reference.shape:
            raise BadInput("shape-mismatch", "image and reference dims differ")
        return {"metrics": models.metrics(image, reference)}

    return app
