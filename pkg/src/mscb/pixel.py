"""Extreme pixel pathway: branch policy (neural blob vs direct
quantization), the uniform quantizer, box-filter downsampling, and
cubic-convolution upsampling back to full resolution.

All quantized-branch arithmetic is integer-exact, so payload bytes are
identical across runs and platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstraintError
from .maps import average_pool

GRAY_CANVAS = 128  # decode start state when the bitstream was dropped

_CUBIC_A = -0.5


@dataclass(frozen=True)
class CodecPolicy:
    """Branching policy: minimum edge length the neural codec accepts plus
    the per-level downsample/bit-depth defaults."""

    en_th: int = 64
    ds_target: int = 16
    bits_per_channel: int = 4

    def __post_init__(self):
        if self.en_th < 1:
            raise ValueError("en_th must be >= 1")
        if not (1 <= self.bits_per_channel <= 8):
            raise ValueError("bits_per_channel must be in 1..8")
        if self.ds_target < 1:
            raise ValueError("ds_target must be >= 1")

    @classmethod
    def for_level(cls, level: int) -> "CodecPolicy":
        try:
            ds, bits = {1: (16, 4), 2: (24, 4), 3: (32, 3)}[level]
        except KeyError:
            raise ValueError(f"unknown level {level}") from None
        return cls(ds_target=ds, bits_per_channel=bits)


@dataclass(frozen=True)
class PixelPayload:
    """Either an opaque neural-codec blob, a quantized downsampled pixel
    matrix, or the explicit empty marker (bitstream dropped)."""

    branch: str  # "neural" | "quantized" | "empty"
    blob: bytes = b""
    ds_w: int = 0
    ds_h: int = 0
    bits_per_channel: int = 0
    packed: bytes = b""
    # Downsample factor (original longest side / downsampled longest side).
    # Derivable metadata, not serialized; excluded from equality.
    x: float | None = field(default=None, compare=False)

    def validate(self) -> None:
        if self.branch == "neural":
            if not self.blob:
                raise ConstraintError("neural pixel payload has an empty blob")
        elif self.branch == "quantized":
            if self.ds_w < 1 or self.ds_h < 1:
                raise ConstraintError("quantized payload needs ds_w, ds_h >= 1")
            if self.ds_w > 255 or self.ds_h > 255:
                raise ConstraintError("quantized payload dims exceed u8 range")
            if not (1 <= self.bits_per_channel <= 8):
                raise ConstraintError("bits_per_channel must be in 1..8")
            need = (self.ds_w * self.ds_h * 3 * self.bits_per_channel + 7) // 8
            if len(self.packed) != need:
                raise ConstraintError(
                    f"quantized payload needs {need} packed bytes, got {len(self.packed)}")
        elif self.branch == "empty":
            if self.blob or self.packed or self.ds_w or self.ds_h or self.bits_per_channel:
                raise ConstraintError("empty pixel payload must carry no data")
        else:
            raise ConstraintError(f"unknown pixel branch {self.branch!r}")
        if self.x is not None and self.x < 1:
            raise ConstraintError("downsample factor must be >= 1")


def choose_branch(orig_size: int, x: float, policy: CodecPolicy) -> str:
    """Neural when the downsampled longest side still meets the codec's
    minimum input size, direct quantization otherwise."""
    if x < 1:
        raise ValueError("downsample factor must be >= 1")
    return "neural" if orig_size / x >= policy.en_th else "quantized"


def quantize_values(values: np.ndarray, bits: int) -> np.ndarray:
    """8-bit channel values -> b-bit indices, round half up (integer-exact)."""
    _check_bits(bits)
    v = np.asarray(values, dtype=np.int64)
    levels = (1 << bits) - 1
    return ((2 * v * levels + 255) // 510).astype(np.uint8)


def dequantize_values(indices: np.ndarray, bits: int) -> np.ndarray:
    """b-bit indices -> reconstructed 8-bit values, round half up."""
    _check_bits(bits)
    idx = np.asarray(indices, dtype=np.int64)
    levels = (1 << bits) - 1
    return ((2 * idx * 255 + levels) // (2 * levels)).astype(np.uint8)


def _check_bits(bits: int) -> None:
    if not (1 <= bits <= 8):
        raise ValueError(f"bits_per_channel must be in 1..8, got {bits}")


def pack_indices(indices: np.ndarray, bits: int) -> bytes:
    """Bit-pack (h, w, 3) indices channel-interleaved, row-major, MSB-first."""
    _check_bits(bits)
    flat = np.ascontiguousarray(indices, dtype=np.uint8).ravel()
    shifts = np.arange(bits - 1, -1, -1)
    planes = ((flat[:, None] >> shifts) & 1).astype(np.uint8).ravel()
    return np.packbits(planes).tobytes()


def unpack_indices(data: bytes, ds_w: int, ds_h: int, bits: int) -> np.ndarray:
    """Inverse of :func:`pack_indices`; returns (ds_h, ds_w, 3) uint8."""
    _check_bits(bits)
    n = ds_w * ds_h * 3
    need = (n * bits + 7) // 8
    if len(data) != need:
        raise ConstraintError(f"packed pixel data needs {need} bytes, got {len(data)}")
    planes = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    if planes[n * bits:].any():
        raise ConstraintError("pixel padding bits must be zero")
    weights = 1 << np.arange(bits - 1, -1, -1)
    vals = planes[: n * bits].reshape(n, bits) @ weights
    return vals.astype(np.uint8).reshape(ds_h, ds_w, 3)


def downsample(image: np.ndarray, target_longest_side: int) -> np.ndarray:
    """Aspect-preserving box-filter downsample to the target longest side.

    The short side rounds half up (minimum 1); images already within the
    target are returned unchanged.
    """
    if target_longest_side < 1:
        raise ValueError("target size must be >= 1")
    h, w = image.shape[:2]
    longest = max(h, w)
    if target_longest_side >= longest:
        return image.copy()
    new_h = max(1, int(math.floor(h * target_longest_side / longest + 0.5)))
    new_w = max(1, int(math.floor(w * target_longest_side / longest + 0.5)))
    out = np.empty((new_h, new_w, 3), dtype=np.uint8)
    for c in range(3):
        pooled = average_pool(image[:, :, c].astype(np.float64), (new_h, new_w))
        out[:, :, c] = np.clip(np.floor(pooled + 0.5), 0, 255).astype(np.uint8)
    return out


def _cubic_kernel(t: np.ndarray) -> np.ndarray:
    at = np.abs(t)
    a = _CUBIC_A
    near = (a + 2) * at**3 - (a + 3) * at**2 + 1
    far = a * (at**3 - 5 * at**2 + 8 * at - 4)
    return np.where(at <= 1, near, np.where(at < 2, far, 0.0))


def _cubic_axis_weights(src: int, dst: int) -> tuple[np.ndarray, np.ndarray]:
    """Tap indices (dst, 4) and normalized weights for one axis.

    Centers align (src_pos = (dst_pos + 0.5) * src/dst - 0.5); taps outside
    the image clamp to the border sample.
    """
    pos = (np.arange(dst) + 0.5) * (src / dst) - 0.5
    base = np.floor(pos).astype(np.int64)
    frac = pos - base
    offsets = np.arange(-1, 3)
    idx = np.clip(base[:, None] + offsets, 0, src - 1)
    w = _cubic_kernel(frac[:, None] - offsets)
    return idx, w / w.sum(axis=1, keepdims=True)


def bicubic_upsample(image: np.ndarray, width: int, height: int) -> np.ndarray:
    """Separable cubic-convolution resample to (height, width) float64,
    clipped to [0, 255]."""
    if width < 1 or height < 1:
        raise ValueError("target size must be >= 1")
    data = np.asarray(image, dtype=np.float64)
    squeeze = data.ndim == 2
    if squeeze:
        data = data[:, :, None]
    ridx, rw = _cubic_axis_weights(data.shape[0], height)
    data = np.einsum("ok,okwc->owc", rw, data[ridx])
    cidx, cw = _cubic_axis_weights(data.shape[1], width)
    data = np.einsum("ok,hokc->hoc", cw, data[:, cidx])
    data = np.clip(data, 0.0, 255.0)
    return data[:, :, 0] if squeeze else data


def to_u8(image: np.ndarray) -> np.ndarray:
    """Round half up and clip to an 8-bit raster."""
    return np.clip(np.floor(np.asarray(image, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)


def encode_pixels(image: np.ndarray, policy: CodecPolicy, backend=None) -> PixelPayload:
    """Downsample per policy, then either hand the small image to the neural
    codec or quantize it directly."""
    h, w = image.shape[:2]
    longest = max(h, w)
    ds_longest = min(policy.ds_target, longest)
    x = longest / ds_longest
    small = downsample(image, ds_longest)
    if choose_branch(longest, x, policy) == "neural":
        if backend is None:
            raise ValueError("neural pixel branch requires a backend")
        blob = backend.neural_encode(small, quality=policy.bits_per_channel)
        return PixelPayload(branch="neural", blob=bytes(blob), x=x)
    bits = policy.bits_per_channel
    idx = quantize_values(small, bits)
    return PixelPayload(
        branch="quantized",
        ds_w=small.shape[1],
        ds_h=small.shape[0],
        bits_per_channel=bits,
        packed=pack_indices(idx, bits),
        x=x,
    )


def decode_pixels(payload: PixelPayload, width: int, height: int, backend=None) -> np.ndarray:
    """Reconstruct the full-resolution reference raster for the decoder."""
    payload.validate()
    if payload.branch == "empty":
        return np.full((height, width, 3), GRAY_CANVAS, dtype=np.uint8)
    if payload.branch == "neural":
        if backend is None:
            raise ValueError("neural pixel branch requires a backend")
        small = backend.neural_decode(payload.blob)
    else:
        idx = unpack_indices(payload.packed, payload.ds_w, payload.ds_h,
                             payload.bits_per_channel)
        small = dequantize_values(idx, payload.bits_per_channel)
    if small.shape[:2] == (height, width):
        return small.astype(np.uint8)
    return to_u8(bicubic_upsample(small, width, height))
