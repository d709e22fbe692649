"""Regenerate the shipped stub conformance vectors and the OpenAPI schema.

Run from service/: python3 tools/make_fixtures.py
The vectors are literal request/response byte pairs against the stub at
seed 0; any change to the stub rules shows up as a fixture diff.
"""

import base64
import io
import json
import os
import sys

import numpy as np
from fastapi.testclient import TestClient
from PIL import Image

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from mscb_service.app import create_app  # noqa: E402
from mscb_service.config import ServiceConfig  # noqa: E402

HERE = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.join(HERE, "..", "fixtures")
SCHEMA = os.path.join(HERE, "..", "schema")


def png_b64(array: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(array.astype(np.uint8), mode="RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def main() -> None:
    app = create_app(ServiceConfig(mode="stub", seed=0))
    client = TestClient(app)

    rng = np.random.default_rng(99)
    flat = np.full((6, 6, 3), 120, dtype=np.uint8)
    speckle = rng.integers(0, 256, size=(8, 5, 3)).astype(np.uint8)
    codec_blob = client.post("/v1/codec/encode",
                             json={"image": png_b64(speckle), "quality": 4}).json()["payload"]

    requests = [
        ("/v1/describe", {"image": png_b64(speckle)}),
        ("/v1/describe", {"image": png_b64(flat)}),
        ("/v1/embed/image", {"image": png_b64(speckle)}),
        ("/v1/embed/text", {"text": "green bike"}),
        ("/v1/embed/text", {"text": ""}),
        ("/v1/diffuse", {"image": png_b64(flat), "prompt": "probe 4", "steps": 1}),
        ("/v1/diffuse", {"image": png_b64(speckle), "prompt": "a quiet scene", "steps": 10}),
        ("/v1/codec/encode", {"image": png_b64(speckle), "quality": 4}),
        ("/v1/codec/decode", {"payload": codec_blob}),
        ("/v1/metrics", {"image": png_b64(flat), "reference": png_b64(flat)}),
        ("/v1/describe", {"image": "!!!not-base64!!!"}),
        ("/v1/codec/decode", {"payload": base64.b64encode(b"JUNK").decode()}),
    ]

    vectors = []
    for path, payload in requests:
        body = json.dumps(payload, separators=(",", ":")).encode("utf-8")
        resp = client.post(path, content=body,
                           headers={"content-type": "application/json"})
        vectors.append({
            "path": path,
            "request_b64": base64.b64encode(body).decode("ascii"),
            "status": resp.status_code,
            "response_b64": base64.b64encode(resp.content).decode("ascii"),
        })

    os.makedirs(FIXTURES, exist_ok=True)
    with open(os.path.join(FIXTURES, "stub_vectors.json"), "w") as fh:
        json.dump({"seed": 0, "vectors": vectors}, fh, indent=2)
        fh.write("\n")

    os.makedirs(SCHEMA, exist_ok=True)
    with open(os.path.join(SCHEMA, "openapi.json"), "w") as fh:
        json.dump(app.openapi(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {len(vectors)} vectors and schema")


if __name__ == "__main__":
    main()
