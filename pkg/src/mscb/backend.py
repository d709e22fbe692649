"""Model backends: the deterministic in-process mock used by every test in
this package, and the HTTP client for a remote model service.

The mock's digest/PRNG/template rules are a wire-level contract: the remote
service's stub mode reimplements them byte for byte, so a pipeline run
against either produces identical containers.
"""

from __future__ import annotations

import base64
import struct
from dataclasses import dataclass

import numpy as np
import requests

from . import imagefiles
from .digests import (SplitMix64, canonical_image_bytes, canonical_text_bytes,
                      fnv1a64, seeded_digest)
from .errors import SchemaError, TransportError
from .maps import FeatureTensor
from .pixel import dequantize_values, pack_indices, quantize_values, unpack_indices

MOCK_GRID = 16      # image feature grid (per side)
MOCK_CHANNELS = 32  # feature channels
MOCK_BLUR_PASSES = 3
_NEURAL_MAGIC = b"MNC1"
PSNR_CAP = 99.0

_ADJECTIVES = ("green", "wooden", "rusty", "bright", "pale",
               "golden", "weathered", "quiet")
_NOUNS = ("bike", "door", "grass", "tower", "boat",
          "lantern", "bridge", "awning")
_PLACES = ("courtyard", "market", "harbor", "garden",
           "alley", "rooftop", "meadow", "shore")
_MOODS = ("calm", "busy", "hazy", "sunlit",
          "shaded", "misty", "windswept", "still")


@dataclass(frozen=True)
class DescribeResult:
    """Raw describer output: untrusted until it passes sanitize."""

    items: tuple[tuple[str, str], ...]
    detail_all: str


@dataclass(frozen=True)
class BackendHandle:
    """Backend selection: in-process mock, or a remote service address."""

    mode: str = "mock"
    endpoint: str = ""
    timeout: float = 120.0
    retries: int = 2
    seed: int = 0
    token: str = ""

    def open(self):
        if self.mode == "mock":
            return MockBackend(seed=self.seed)
        if self.mode == "remote":
            if not self.endpoint:
                raise ValueError("remote backend requires an endpoint address")
            return RemoteBackend(self.endpoint, timeout=self.timeout,
                                 retries=self.retries, token=self.token)
        raise ValueError(f"unknown backend mode {self.mode!r}")


def prompt_delta(prompt: str) -> int:
    """The mock diffuse brightness shift: digest(prompt) mod 7 - 3."""
    return fnv1a64(canonical_text_bytes(prompt)) % 7 - 3


def _unit_values(seed: int, n: int) -> np.ndarray:
    return SplitMix64(seed).next_unit_array(n)


class MockBackend:
    """Bit-deterministic stand-in for every model role.

    All outputs are pure functions of (input bytes, seed) through integer
    digest arithmetic; safe for concurrent use.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed

    # -- describer ---------------------------------------------------------

    def describe(self, image: np.ndarray) -> DescribeResult:
        s = SplitMix64(seeded_digest(b"describe:" + canonical_image_bytes(image), self.seed))
        nouns = []
        pool = list(range(len(_NOUNS)))
        for _ in range(3):
            nouns.append(pool.pop(s.next_index(len(pool))))
        items = []
        for n in nouns:
            adj = _ADJECTIVES[s.next_index(len(_ADJECTIVES))]
            place = _PLACES[s.next_index(len(_PLACES))]
            name = f"{adj} {_NOUNS[n]}"
            detail = f"a {adj} {_NOUNS[n]} beside the {place}"
            items.append((name, detail))
        mood = _MOODS[s.next_index(len(_MOODS))]
        mood2 = _MOODS[s.next_index(len(_MOODS))]
        place_all = _PLACES[s.next_index(len(_PLACES))]
        (n0, d0), (n1, _), (n2, _) = items
        detail_all = (
            f"A {mood} {place_all} scene with a {n0}, a {n1}, and a {n2}. "
            f"The {n0.split()[-1]} stands out in front, {d0.split('beside')[0].strip()} "
            f"resting nearby, while the {n1.split()[-1]} and the {n2.split()[-1]} "
            f"fill the background in {mood2} light, giving the frame a simple, "
            f"detailed, and coherent look overall."
        )
        return DescribeResult(items=tuple(items), detail_all=detail_all)

    # -- embedder ----------------------------------------------------------

    def embed_image(self, image: np.ndarray) -> FeatureTensor:
        seed = seeded_digest(b"embed-image:" + canonical_image_bytes(image), self.seed)
        data = _unit_values(seed, MOCK_GRID * MOCK_GRID * MOCK_CHANNELS)
        return FeatureTensor(kind="image",
                             data=data.reshape(MOCK_GRID, MOCK_GRID, MOCK_CHANNELS))

    def embed_text(self, text: str) -> FeatureTensor:
        seed = seeded_digest(b"embed-text:" + canonical_text_bytes(text), self.seed)
        data = _unit_values(seed, MOCK_CHANNELS)
        return FeatureTensor(kind="text", data=data.reshape(1, 1, MOCK_CHANNELS))

    # -- restorer ----------------------------------------------------------

    def diffuse(self, image: np.ndarray, prompt: str, steps: int) -> np.ndarray:
        """Box-blur min(steps, 3) times, then shift every channel by the
        prompt's digest delta. Integer arithmetic only."""
        if steps < 1:
            raise ValueError("steps must be >= 1")
        out = image.astype(np.int64)
        for _ in range(min(int(steps), MOCK_BLUR_PASSES)):
            p = np.pad(out, ((1, 1), (1, 1), (0, 0)), mode="edge")
            acc = np.zeros_like(out)
            for dy in range(3):
                for dx in range(3):
                    acc += p[dy:dy + out.shape[0], dx:dx + out.shape[1]]
            out = (2 * acc + 9) // 18
        return np.clip(out + prompt_delta(prompt), 0, 255).astype(np.uint8)

    # -- pixel codec -------------------------------------------------------

    def neural_encode(self, image: np.ndarray, quality: int) -> bytes:
        """Self-describing quantized blob; a non-neural stand-in for a
        learned codec (documented, not a claim of neural behavior)."""
        bits = min(max(int(quality), 1), 8)
        h, w = image.shape[:2]
        if w > 0xFFFF or h > 0xFFFF:
            raise ValueError("image too large for the mock codec")
        idx = quantize_values(image, bits)
        return (_NEURAL_MAGIC + struct.pack("<HHB", w, h, bits)
                + pack_indices(idx, bits))

    def neural_decode(self, blob: bytes) -> np.ndarray:
        if len(blob) < 9 or blob[:4] != _NEURAL_MAGIC:
            raise SchemaError("not a mock codec bitstream")
        w, h, bits = struct.unpack("<HHB", blob[4:9])
        if not (1 <= bits <= 8) or w < 1 or h < 1:
            raise SchemaError("corrupt mock codec header")
        body = blob[9:]
        if len(body) != (w * h * 3 * bits + 7) // 8:
            raise SchemaError("mock codec payload length mismatch")
        return dequantize_values(unpack_indices(body, w, h, bits), bits)

    # -- metrics -----------------------------------------------------------

    def metrics(self, image: np.ndarray, reference: np.ndarray) -> dict[str, float]:
        if image.shape != reference.shape:
            raise ValueError("metric inputs must have identical shapes")
        err = image.astype(np.float64) - reference.astype(np.float64)
        mse = float(np.mean(err * err))
        psnr = PSNR_CAP if mse == 0 else min(PSNR_CAP, 10.0 * np.log10(255.0**2 / mse))
        return {"mse": mse, "psnr": psnr}


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _unb64(text, what: str) -> bytes:
    if not isinstance(text, str):
        raise SchemaError(f"{what} must be a base64 string")
    try:
        return base64.b64decode(text, validate=True)
    except Exception as exc:
        raise SchemaError(f"{what} is not valid base64") from exc


class RemoteBackend:
    """HTTP client for the model service (JSON bodies, base64 payloads).

    Transport failures are retried (the endpoints are pure, so retries are
    safe); schema violations in responses raise immediately.
    """

    def __init__(self, endpoint: str, timeout: float = 120.0, retries: int = 2,
                 token: str = "", session: requests.Session | None = None):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.token = token
        self._session = session or requests.Session()

    def _post(self, path: str, payload: dict) -> dict:
        headers = {}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        last_exc = None
        for _ in range(self.retries + 1):
            try:
                resp = self._session.post(self.endpoint + path, json=payload,
                                          timeout=self.timeout, headers=headers)
            except requests.RequestException as exc:
                last_exc = exc
                continue
            if resp.status_code != 200:
                raise TransportError(
                    f"{path} returned HTTP {resp.status_code}: {_error_text(resp)}")
            try:
                body = resp.json()
            except ValueError as exc:
                raise SchemaError(f"{path} returned non-JSON body") from exc
            if not isinstance(body, dict):
                raise SchemaError(f"{path} returned a non-object body")
            return body
        raise TransportError(f"{path} unreachable after {self.retries + 1} attempts: {last_exc}")

    def describe(self, image: np.ndarray) -> DescribeResult:
        body = self._post("/v1/describe", {"image": _b64(imagefiles.encode_png(image))})
        items = body.get("items")
        detail_all = body.get("detail_all")
        if not isinstance(items, list) or not isinstance(detail_all, str):
            raise SchemaError("describe response missing items/detail_all")
        if not detail_all:
            raise SchemaError("describe response has an empty detail_all")
        parsed = []
        for it in items:
            if (not isinstance(it, dict) or not isinstance(it.get("name"), str)
                    or not isinstance(it.get("detail"), str)):
                raise SchemaError("describe item must carry string name/detail")
            parsed.append((it["name"], it["detail"]))
        return DescribeResult(items=tuple(parsed), detail_all=detail_all)

    def _embed(self, path: str, payload: dict, kind: str) -> FeatureTensor:
        body = self._post(path, payload)
        grid = body.get("grid")
        channels = body.get("channels")
        if (not isinstance(grid, list) or len(grid) != 2
                or not all(isinstance(g, int) and g >= 1 for g in grid)
                or not isinstance(channels, int) or channels < 1):
            raise SchemaError(f"{path} response has a bad grid/channels declaration")
        if body.get("dtype") != "float32":
            raise SchemaError(f"{path} response dtype must be float32")
        raw = _unb64(body.get("data"), "tensor data")
        n = grid[0] * grid[1] * channels
        if len(raw) != 4 * n:
            raise SchemaError(f"{path} tensor data length {len(raw)} != {4 * n}")
        values = np.frombuffer(raw, dtype="<f4").astype(np.float64)
        if not np.all(np.isfinite(values)):
            raise SchemaError(f"{path} tensor contains non-finite values")
        return FeatureTensor(kind=kind, data=values.reshape(grid[0], grid[1], channels))

    def embed_image(self, image: np.ndarray) -> FeatureTensor:
        return self._embed("/v1/embed/image",
                           {"image": _b64(imagefiles.encode_png(image))}, "image")

    def embed_text(self, text: str) -> FeatureTensor:
        return self._embed("/v1/embed/text", {"text": text}, "text")

    def diffuse(self, image: np.ndarray, prompt: str, steps: int) -> np.ndarray:
        if steps < 1:
            raise ValueError("steps must be >= 1")
        body = self._post("/v1/diffuse", {"image": _b64(imagefiles.encode_png(image)),
                                          "prompt": prompt, "steps": int(steps)})
        out = imagefiles.decode_png(_unb64(body.get("image"), "diffuse image"))
        if out.shape != image.shape:
            raise SchemaError("diffuse response dims differ from request dims")
        return out

    def neural_encode(self, image: np.ndarray, quality: int) -> bytes:
        body = self._post("/v1/codec/encode",
                          {"image": _b64(imagefiles.encode_png(image)),
                           "quality": int(quality)})
        blob = _unb64(body.get("payload"), "codec payload")
        if not blob:
            raise SchemaError("codec encode returned an empty payload")
        return blob

    def neural_decode(self, blob: bytes) -> np.ndarray:
        body = self._post("/v1/codec/decode", {"payload": _b64(blob)})
        return imagefiles.decode_png(_unb64(body.get("image"), "codec image"))

    def metrics(self, image: np.ndarray, reference: np.ndarray) -> dict[str, float]:
        body = self._post("/v1/metrics",
                          {"image": _b64(imagefiles.encode_png(image)),
                           "reference": _b64(imagefiles.encode_png(reference))})
        metrics = body.get("metrics")
        if not isinstance(metrics, dict) or not metrics:
            raise SchemaError("metrics response missing the metrics object")
        out = {}
        for key, value in metrics.items():
            if not isinstance(key, str) or not isinstance(value, (int, float)):
                raise SchemaError("metrics must map string names to numbers")
            out[key] = float(value)
        return out


def _error_text(resp) -> str:
    try:
        body = resp.json()
        return str(body.get("error", {}).get("message", body))
    except ValueError:
        return resp.text[:200]
