import numpy as np
import pytest

from mscb.backend import MockBackend


@pytest.fixture
def mock():
    return MockBackend(seed=0)


def synthetic_raster(kind: str, width: int, height: int, seed: int = 0) -> np.ndarray:
    """Deterministic test rasters with distinct statistics per kind."""
    rng = np.random.default_rng(seed)
    xs = np.linspace(0.0, 1.0, width)
    ys = np.linspace(0.0, 1.0, height)
    xg, yg = np.meshgrid(xs, ys)
    if kind == "gradient":
        img = np.stack([xg, yg, (xg + yg) / 2], axis=2) * 255
    elif kind == "rings":
        r = np.hypot(xg - 0.5, yg - 0.5)
        img = np.stack([np.sin(12 * r), np.cos(9 * r), np.sin(5 * r + 1)], axis=2)
        img = (img + 1) * 127.5
    elif kind == "blocks":
        img = np.zeros((height, width, 3))
        for _ in range(12):
            x0, y0 = rng.integers(0, width), rng.integers(0, height)
            w = int(rng.integers(4, max(5, width // 3)))
            h = int(rng.integers(4, max(5, height // 3)))
            img[y0:y0 + h, x0:x0 + w] = rng.integers(0, 256, size=3)
    elif kind == "noise":
        img = rng.integers(0, 256, size=(height, width, 3))
    else:
        raise ValueError(f"unknown raster kind {kind!r}")
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


def raster_suite(width: int = 512, height: int = 512, count: int = 10) -> list[np.ndarray]:
    kinds = ("gradient", "rings", "blocks", "noise")
    return [synthetic_raster(kinds[i % 4], width, height, seed=i) for i in range(count)]
