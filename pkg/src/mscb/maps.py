"""Per-item semantic maps: image/text feature products, redundancy
elimination, pooling + binarization down to a packed bit matrix, and
nearest-neighbor expansion back to a full-resolution compositing mask.

RawMap values are plain 2D float64 arrays over the feature grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstraintError

MAP_DIM_MIN = 8
MAP_DIM_MAX = 16

# Affine-invariant degenerate rule: a constant field binarizes to all ones.
_DEGENERATE_EPS = 1e-12


@dataclass(frozen=True)
class FeatureTensor:
    """Dense feature grid from the embedding backend.

    ``data`` is (rows, cols, channels) float64, row-major; text features use
    a 1x1 grid.
    """

    kind: str  # "image" | "text"
    data: np.ndarray

    def __post_init__(self):
        if self.kind not in ("image", "text"):
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if self.data.ndim != 3 or self.data.shape[2] < 1:
            raise ValueError("feature data must be (rows, cols, channels)")
        if self.kind == "text" and self.data.shape[:2] != (1, 1):
            raise ValueError("text features must have a 1x1 grid")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("feature data contains non-finite values")

    @property
    def grid(self) -> tuple[int, int]:
        return self.data.shape[0], self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class BinaryMap:
    """Packed bit matrix locating one item (row-major, MSB-first per byte)."""

    rows: int
    cols: int
    packed: bytes

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("map dimensions must be >= 1")
        need = (self.rows * self.cols + 7) // 8
        if len(self.packed) != need:
            raise ValueError(f"map needs {need} packed bytes, got {len(self.packed)}")
        # bits past rows*cols in the final byte must be zero (canonical form)
        tail = np.unpackbits(np.frombuffer(self.packed, dtype=np.uint8))[self.rows * self.cols:]
        if tail.any():
            raise ValueError("map padding bits must be zero")

    @classmethod
    def from_array(cls, bits: np.ndarray) -> "BinaryMap":
        bits = np.asarray(bits)
        if bits.ndim != 2:
            raise ValueError("map bits must be a 2D array")
        flat = (bits != 0).astype(np.uint8).ravel()
        return cls(rows=bits.shape[0], cols=bits.shape[1], packed=np.packbits(flat).tobytes())

    def to_array(self) -> np.ndarray:
        flat = np.unpackbits(np.frombuffer(self.packed, dtype=np.uint8))
        return flat[: self.rows * self.cols].reshape(self.rows, self.cols).astype(bool)

    @property
    def popcount(self) -> int:
        return int(self.to_array().sum())

    def check_wire_dims(self) -> None:
        """Container-boundary rule: wire maps are 8x8 .. 16x16."""
        for d in (self.rows, self.cols):
            if not (MAP_DIM_MIN <= d <= MAP_DIM_MAX):
                raise ConstraintError(
                    f"map dims {self.rows}x{self.cols} outside "
                    f"{MAP_DIM_MIN}..{MAP_DIM_MAX}")


def feature_product(img: FeatureTensor, txt: FeatureTensor) -> FeatureTensor:
    """Elementwise image-text product, text vector broadcast over the grid."""
    _check_channels(img, txt)
    return FeatureTensor(kind="image", data=img.data * txt.data[0, 0, :])


def redundancy_bias(null_img: FeatureTensor, txt: FeatureTensor) -> np.ndarray:
    """Per-position scalar bias from a null (empty) image: the channel sum
    of the null-image/text feature product."""
    _check_channels(null_img, txt)
    return np.sum(null_img.data * txt.data[0, 0, :], axis=2)


def raw_map(f_t: FeatureTensor, omega: np.ndarray) -> np.ndarray:
    """Channel sum of the feature product minus its redundant part:
    sum_o(F[p,o] - F[p,o]*w[p]) = (1 - w[p]) * sum_o F[p,o]."""
    omega = np.asarray(omega, dtype=np.float64)
    if omega.shape != f_t.grid:
        raise ValueError(f"bias grid {omega.shape} != feature grid {f_t.grid}")
    return (1.0 - omega) * np.sum(f_t.data, axis=2)


def _pool_weights(src: int, dst: int) -> np.ndarray:
    """(dst, src) area-overlap weight matrix; each row sums to 1.

    Cell i of the target covers [i*src/dst, (i+1)*src/dst) in source index
    space; fractional source cells contribute their covered area.
    """
    w = np.zeros((dst, src))
    for i in range(dst):
        lo = i * src / dst
        hi = (i + 1) * src / dst
        for s in range(int(np.floor(lo)), min(int(np.ceil(hi)), src)):
            w[i, s] = min(hi, s + 1) - max(lo, s)
    return w / w.sum(axis=1, keepdims=True)


def average_pool(field: np.ndarray, target: tuple[int, int]) -> np.ndarray:
    """Equal-area average pooling of a 2D field onto the target grid."""
    field = np.asarray(field, dtype=np.float64)
    tr, tc = target
    if tr > field.shape[0] or tc > field.shape[1]:
        raise ValueError(f"pool target {target} exceeds source grid {field.shape}")
    return _pool_weights(field.shape[0], tr) @ field @ _pool_weights(field.shape[1], tc).T


def binarize_pool(field: np.ndarray, target: tuple[int, int],
                  enforce_size_range: bool = True) -> BinaryMap:
    """Average-pool the raw map onto ``target``, min-max normalize, and
    threshold at 0.5.

    A degenerate (constant) field binarizes to all ones, which errs toward
    preserving the item region and keeps the output invariant under positive
    affine transforms of the input. ``enforce_size_range=False`` relaxes the
    8..16 wire bound for unit-scale tests.
    """
    tr, tc = target
    if enforce_size_range:
        for d in (tr, tc):
            if not (MAP_DIM_MIN <= d <= MAP_DIM_MAX):
                raise ConstraintError(f"map target {target} outside "
                                      f"{MAP_DIM_MIN}..{MAP_DIM_MAX}")
    pooled = average_pool(field, target)
    lo = pooled.min()
    hi = pooled.max()
    if hi - lo < _DEGENERATE_EPS:
        bits = np.ones((tr, tc), dtype=bool)
    else:
        bits = (pooled - lo) / (hi - lo) >= 0.5
    return BinaryMap.from_array(bits)


def upsample_mask(bmap: BinaryMap, width: int, height: int) -> np.ndarray:
    """Nearest-neighbor block expansion to (height, width) bool.

    Each output pixel takes the bit of the map cell containing its center.
    """
    if width < bmap.cols or height < bmap.rows:
        raise ValueError(f"mask target {width}x{height} smaller than map "
                         f"{bmap.cols}x{bmap.rows}")
    rows = ((np.arange(height) + 0.5) * bmap.rows / height).astype(np.int64)
    cols = ((np.arange(width) + 0.5) * bmap.cols / width).astype(np.int64)
    arr = bmap.to_array()
    return arr[np.minimum(rows, bmap.rows - 1)][:, np.minimum(cols, bmap.cols - 1)]


def _check_channels(a: FeatureTensor, b: FeatureTensor) -> None:
    if a.channels != b.channels:
        raise ValueError(f"channel mismatch: {a.channels} != {b.channels}")
