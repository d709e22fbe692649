"""Raster file and byte-stream I/O. PNG and PPM in, PNG out — lossless
formats only, so codec behavior is attributable to the codec.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import FormatError

_INPUT_FORMATS = {"PNG", "PPM"}


def _to_array(img: Image.Image) -> np.ndarray:
    arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise FormatError("decoded image is not RGB")
    return arr


def load_raster(path: str) -> np.ndarray:
    """Load a PNG or PPM file as an (h, w, 3) uint8 array."""
    try:
        with Image.open(path) as img:
            if img.format not in _INPUT_FORMATS:
                raise FormatError(
                    f"unsupported input format {img.format!r} (PNG or PPM only)")
            return _to_array(img)
    except UnidentifiedImageError as exc:
        raise FormatError(f"cannot identify image file {path!r}") from exc


def save_png(path: str, image: np.ndarray) -> None:
    Image.fromarray(np.asarray(image, dtype=np.uint8), mode="RGB").save(path, format="PNG")


def encode_png(image: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(image, dtype=np.uint8), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    try:
        with Image.open(io.BytesIO(data)) as img:
            return _to_array(img)
    except UnidentifiedImageError as exc:
        raise FormatError("payload is not a decodable image") from exc
