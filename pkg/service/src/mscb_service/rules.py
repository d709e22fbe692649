"""Deterministic stub-mode rules.

These constants and algorithms mirror the toolkit client's documented mock
backend byte for byte (FNV-1a digests over canonical input bytes, a
splitmix64 value stream, the describe templates, the blur+delta restorer,
and the quantized stand-in codec). They are deliberately reimplemented here
rather than imported: the service's only coupling to the client is the wire
protocol, and the conformance fixtures pin this file against drift.
"""

from __future__ import annotations

import io
import struct

import numpy as np
from PIL import Image

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

IMAGE_TAG = b"MSCB-IMG"
TEXT_TAG = b"MSCB-TXT"

GRID = 16
CHANNELS = 32
BLUR_PASSES = 3
CODEC_MAGIC = b"MNC1"
PSNR_CAP = 99.0

ADJECTIVES = ("green", "wooden", "rusty", "bright", "pale",
              "golden", "weathered", "quiet")
NOUNS = ("bike", "door", "grass", "tower", "boat",
         "lantern", "bridge", "awning")
PLACES = ("courtyard", "market", "harbor", "garden",
          "alley", "rooftop", "meadow", "shore")
MOODS = ("calm", "busy", "hazy", "sunlit",
         "shaded", "misty", "windswept", "still")


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def seeded_digest(data: bytes, seed: int) -> int:
    return fnv1a64(data + (seed & _MASK64).to_bytes(8, "little"))


def canonical_image_bytes(image: np.ndarray) -> bytes:
    h, w = image.shape[:2]
    return (IMAGE_TAG + int(w).to_bytes(4, "little") + int(h).to_bytes(4, "little")
            + np.ascontiguousarray(image).tobytes())


def canonical_text_bytes(text: str) -> bytes:
    return TEXT_TAG + text.encode("utf-8")


class SplitMix64:
    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return (z ^ (z >> 31)) & _MASK64

    def next_index(self, n: int) -> int:
        return self.next_u64() % n

    def next_unit_array(self, n: int) -> np.ndarray:
        if n == 0:
            return np.zeros(0)
        steps = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(self._state) + steps * np.uint64(0x9E3779B97F4A7C15)
        self._state = int(z[-1])
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
        return (z >> np.uint64(40)).astype(np.float64) / float(1 << 23) - 1.0


def decode_png(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def encode_png(image: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(image, dtype=np.uint8), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def describe(image: np.ndarray, seed: int) -> dict:
    s = SplitMix64(seeded_digest(b"describe:" + canonical_image_bytes(image), seed))
    nouns = []
    pool = list(range(len(NOUNS)))
    for _ in range(3):
        nouns.append(pool.pop(s.next_index(len(pool))))
    items = []
    for n in nouns:
        adj = ADJECTIVES[s.next_index(len(ADJECTIVES))]
        place = PLACES[s.next_index(len(PLACES))]
        items.append((f"{adj} {NOUNS[n]}", f"a {adj} {NOUNS[n]} beside the {place}"))
    mood = MOODS[s.next_index(len(MOODS))]
    mood2 = MOODS[s.next_index(len(MOODS))]
    place_all = PLACES[s.next_index(len(PLACES))]
    (n0, d0), (n1, _), (n2, _) = items
    detail_all = (
        f"A {mood} {place_all} scene with a {n0}, a {n1}, and a {n2}. "
        f"The {n0.split()[-1]} stands out in front, {d0.split('beside')[0].strip()} "
        f"resting nearby, while the {n1.split()[-1]} and the {n2.split()[-1]} "
        f"fill the background in {mood2} light, giving the frame a simple, "
        f"detailed, and coherent look overall."
    )
    return {"items": [{"name": n, "detail": d} for n, d in items],
            "detail_all": detail_all}


def embed_image(image: np.ndarray, seed: int) -> np.ndarray:
    digest = seeded_digest(b"embed-image:" + canonical_image_bytes(image), seed)
    return SplitMix64(digest).next_unit_array(GRID * GRID * CHANNELS)


def embed_text(text: str, seed: int) -> np.ndarray:
    digest = seeded_digest(b"embed-text:" + canonical_text_bytes(text), seed)
    return SplitMix64(digest).next_unit_array(CHANNELS)


def diffuse(image: np.ndarray, prompt: str, steps: int) -> np.ndarray:
    out = image.astype(np.int64)
    for _ in range(min(int(steps), BLUR_PASSES)):
        p = np.pad(out, ((1, 1), (1, 1), (0, 0)), mode="edge")
        acc = np.zeros_like(out)
        for dy in range(3):
            for dx in range(3):
                acc += p[dy:dy + out.shape[0], dx:dx + out.shape[1]]
        out = (2 * acc + 9) // 18
    delta = fnv1a64(canonical_text_bytes(prompt)) % 7 - 3
    return np.clip(out + delta, 0, 255).astype(np.uint8)


def _pack_indices(indices: np.ndarray, bits: int) -> bytes:
    flat = np.ascontiguousarray(indices, dtype=np.uint8).ravel()
    shifts = np.arange(bits - 1, -1, -1)
    planes = ((flat[:, None] >> shifts) & 1).astype(np.uint8).ravel()
    return np.packbits(planes).tobytes()


def _unpack_indices(data: bytes, w: int, h: int, bits: int) -> np.ndarray:
    n = w * h * 3
    planes = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    weights = 1 << np.arange(bits - 1, -1, -1)
    vals = planes[: n * bits].reshape(n, bits) @ weights
    return vals.astype(np.uint8).reshape(h, w, 3)


def codec_encode(image: np.ndarray, quality: int) -> bytes:
    bits = min(max(int(quality), 1), 8)
    h, w = image.shape[:2]
    levels = (1 << bits) - 1
    idx = ((2 * image.astype(np.int64) * levels + 255) // 510).astype(np.uint8)
    return CODEC_MAGIC + struct.pack("<HHB", w, h, bits) + _pack_indices(idx, bits)


class CodecFormatError(ValueError):
    pass


def codec_decode(blob: bytes) -> np.ndarray:
    if len(blob) < 9 or blob[:4] != CODEC_MAGIC:
        raise CodecFormatError("not a stub codec bitstream")
    w, h, bits = struct.unpack("<HHB", blob[4:9])
    if not (1 <= bits <= 8) or w < 1 or h < 1:
        raise CodecFormatError("corrupt stub codec header")
    body = blob[9:]
    if len(body) != (w * h * 3 * bits + 7) // 8:
        raise CodecFormatError("stub codec payload length mismatch")
    idx = _unpack_indices(body, w, h, bits).astype(np.int64)
    levels = (1 << bits) - 1
    return ((2 * idx * 255 + levels) // (2 * levels)).astype(np.uint8)


def metrics(image: np.ndarray, reference: np.ndarray) -> dict:
    err = image.astype(np.float64) - reference.astype(np.float64)
    value = float(np.mean(err * err))
    psnr = PSNR_CAP if value == 0 else min(PSNR_CAP, 10.0 * float(np.log10(255.0**2 / value)))
    return {"mse": value, "psnr": psnr}
