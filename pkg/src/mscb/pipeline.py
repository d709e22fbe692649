"""End-to-end encode/decode orchestration: level policy, backend calls,
per-item masked generation passes, and the final global enhancement pass.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .container import MAX_DIM, MiscContainer, RateReport, rate_report
from .errors import ConstraintError
from .maps import (BinaryMap, binarize_pool, feature_product, raw_map,
                   redundancy_bias, upsample_mask)
from .pixel import CodecPolicy, PixelPayload, decode_pixels, encode_pixels
from .semantic import item_budget, pack_text, sanitize

# Side length of the black canvas embedded as the "empty image" when
# deriving the redundancy bias.
NULL_IMAGE_SIZE = 224

DEFAULT_T_AES = "hyper detail, masterpiece, 4K"


@dataclass(frozen=True)
class LevelPolicy:
    """Per-level operating point: item cap, map size, pixel defaults, and
    diffusion step schedule (final pass runs final_multiplier x n_steps)."""

    level: int
    j_max: int
    map_size: tuple[int, int]
    codec: CodecPolicy
    n_steps: int = 10
    final_multiplier: int = 6
    t_aes: str = DEFAULT_T_AES

    def __post_init__(self):
        if self.level not in (1, 2, 3):
            raise ValueError(f"level must be 1, 2, or 3, got {self.level}")
        if self.level == 3 and self.j_max != 0:
            raise ValueError("level 3 must not carry items")
        if not (0 <= self.j_max <= 3):
            raise ValueError("j_max must be in 0..3")
        if not (4 <= self.final_multiplier <= 8):
            raise ValueError("final_multiplier must be in 4..8")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")

    @classmethod
    def for_level(cls, level: int) -> "LevelPolicy":
        j_max = 0 if level == 3 else 3
        map_size = (16, 16) if level == 2 else (8, 8)
        return cls(level=level, j_max=j_max, map_size=map_size,
                   codec=CodecPolicy.for_level(level))


@dataclass(frozen=True)
class AblationFlags:
    """Content switches for the ablation sweep; defaults keep everything."""

    drop_ndm: bool = False
    drop_detail_all: bool = False
    drop_bitstream: bool = False
    ndm_keep: int = 3

    def __post_init__(self):
        if not (0 <= self.ndm_keep <= 3):
            raise ValueError("ndm_keep must be in 0..3")


# The six content combinations of the ablation study, in drop order.
ABLATION_COMBOS: tuple[tuple[str, AblationFlags], ...] = (
    ("ndm3+detail+bitstream", AblationFlags()),
    ("ndm3+bitstream", AblationFlags(drop_detail_all=True)),
    ("ndm2+bitstream", AblationFlags(drop_detail_all=True, ndm_keep=2)),
    ("ndm1+bitstream", AblationFlags(drop_detail_all=True, ndm_keep=1)),
    ("detail+bitstream", AblationFlags(drop_ndm=True)),
    ("ndm3+detail", AblationFlags(drop_bitstream=True)),
)


def encode(image: np.ndarray, policy: LevelPolicy, backend,
           ablation: AblationFlags = AblationFlags()) -> MiscContainer:
    """Describe, budget, map, and compress one image into a container."""
    _check_raster(image)
    h, w = image.shape[:2]

    described = backend.describe(image)
    budget = item_budget()
    cap = 0 if ablation.drop_ndm else min(budget.j_max, policy.j_max, ablation.ndm_keep)
    payload = sanitize(described.items,
                       "" if ablation.drop_detail_all else described.detail_all,
                       replace(budget, j_max=cap))

    maps: list[BinaryMap] = []
    if payload.j:
        img_feat = backend.embed_image(image)
        null = np.zeros((NULL_IMAGE_SIZE, NULL_IMAGE_SIZE, 3), dtype=np.uint8)
        null_feat = backend.embed_image(null)
        for name, _ in payload.items:
            txt_feat = backend.embed_text(name)
            field = raw_map(feature_product(img_feat, txt_feat),
                            redundancy_bias(null_feat, txt_feat))
            maps.append(binarize_pool(field, policy.map_size))

    if ablation.drop_bitstream:
        pixel = PixelPayload(branch="empty")
    else:
        pixel = encode_pixels(image, policy.codec, backend)

    compressed = pack_text(payload, compress=True)
    raw = pack_text(payload, compress=False)
    return MiscContainer(level=policy.level, width=w, height=h,
                         semantic=payload, maps=tuple(maps), pixel=pixel,
                         text_compressed=len(compressed) < len(raw))


@dataclass
class DecodeTrace:
    """Intermediate decoder states for inspection and testing."""

    i_ref: np.ndarray
    item_states: list[np.ndarray]
    masks: list[np.ndarray]
    prompts: list[tuple[str, int]]
    final: np.ndarray | None = None


def final_prompt(container: MiscContainer, policy: LevelPolicy) -> str:
    """Whole-image description joined with the aesthetic suffix."""
    return ", ".join(p for p in (container.semantic.detail_all, policy.t_aes) if p)


def decode_traced(container: MiscContainer, policy: LevelPolicy,
                  backend) -> tuple[np.ndarray, DecodeTrace]:
    """Decode with the full pass-by-pass state trace.

    Each item pass diffuses the whole canvas, then composites only the
    item's masked region over the previous state; the final pass runs on
    the whole frame with the aesthetic-suffixed prompt.
    """
    container.validate()
    w, h = container.width, container.height
    i_ref = decode_pixels(container.pixel, w, h, backend)
    trace = DecodeTrace(i_ref=i_ref, item_states=[], masks=[], prompts=[])

    state = i_ref
    for (_, detail), bmap in zip(container.semantic.items, container.maps):
        diffused = backend.diffuse(state, detail, policy.n_steps)
        mask = upsample_mask(bmap, w, h)
        state = np.where(mask[:, :, None], diffused, state)
        trace.item_states.append(state)
        trace.masks.append(mask)
        trace.prompts.append((detail, policy.n_steps))

    prompt = final_prompt(container, policy)
    steps = policy.final_multiplier * policy.n_steps
    out = backend.diffuse(state, prompt, steps)
    trace.prompts.append((prompt, steps))
    trace.final = out
    if out.shape[:2] != (h, w):
        raise ConstraintError("backend returned a wrongly sized reconstruction")
    return out, trace


def decode(container: MiscContainer, policy: LevelPolicy, backend) -> np.ndarray:
    return decode_traced(container, policy, backend)[0]


def roundtrip_report(image: np.ndarray, policy: LevelPolicy, backend,
                     ablation: AblationFlags = AblationFlags(),
                     ) -> tuple[MiscContainer, np.ndarray, RateReport]:
    container = encode(image, policy, backend, ablation)
    reconstruction = decode(container, policy, backend)
    return container, reconstruction, rate_report(container)


def ablation_sweep(image: np.ndarray, policy: LevelPolicy, backend,
                   ) -> list[tuple[str, MiscContainer]]:
    """Encode one image under each ablation combination."""
    return [(label, encode(image, policy, backend, flags))
            for label, flags in ABLATION_COMBOS]


def _check_raster(image: np.ndarray) -> None:
    if (not isinstance(image, np.ndarray) or image.ndim != 3
            or image.shape[2] != 3 or image.dtype != np.uint8):
        raise ValueError("expected an (h, w, 3) uint8 raster")
    h, w = image.shape[:2]
    if w < 1 or h < 1:
        raise ValueError("image must be at least 1x1")
    if w > MAX_DIM or h > MAX_DIM:
        raise ConstraintError(f"image side exceeds {MAX_DIM} pixels")
