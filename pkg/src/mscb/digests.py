"""Deterministic digest and PRNG rules shared by the mock backend and the
stub model service.

Everything here is integer arithmetic on canonical byte strings, so the
values are identical across runs, platforms, and reimplementations. The
stub service duplicates these constants; changing anything below breaks
wire-level conformance with it.
"""

from __future__ import annotations

import numpy as np

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

IMAGE_TAG = b"MSCB-IMG"
TEXT_TAG = b"MSCB-TXT"


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a over ``data``."""
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def canonical_image_bytes(image: np.ndarray) -> bytes:
    """Canonical byte form of an RGB raster: tag, u32 LE dims, raw pixels.

    Canonicalizing over decoded pixels (not file bytes) keeps digests
    independent of whichever PNG encoder produced the transport copy.
    """
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ValueError("expected an HxWx3 uint8 raster")
    h, w = image.shape[:2]
    return (
        IMAGE_TAG
        + int(w).to_bytes(4, "little")
        + int(h).to_bytes(4, "little")
        + np.ascontiguousarray(image).tobytes()
    )


def canonical_text_bytes(text: str) -> bytes:
    return TEXT_TAG + text.encode("utf-8")


def seeded_digest(data: bytes, seed: int) -> int:
    """Digest of ``data`` mixed with a u64 seed (appended little-endian)."""
    return fnv1a64(data + (seed & _MASK64).to_bytes(8, "little"))


class SplitMix64:
    """splitmix64 stream; the mock's only source of pseudo-randomness."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return (z ^ (z >> 31)) & _MASK64

    def next_index(self, n: int) -> int:
        """Uniform-ish index in [0, n) (modulo bias irrelevant here)."""
        return self.next_u64() % n

    def next_unit(self) -> float:
        """Value in [-1, 1) on a 2^-23 grid, exactly representable in
        float32 so the wire protocol's float32 tensors stay lossless."""
        return (self.next_u64() >> 40) / float(1 << 23) - 1.0

    def next_unit_array(self, n: int) -> np.ndarray:
        """Vectorized :meth:`next_unit`; advances the state by ``n`` draws
        and matches the scalar sequence exactly."""
        if n == 0:
            return np.zeros(0)
        steps = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(self._state) + steps * np.uint64(0x9E3779B97F4A7C15)
        self._state = int(z[-1])
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
        return (z >> np.uint64(40)).astype(np.float64) / float(1 << 23) - 1.0
