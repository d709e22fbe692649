"""Text side of the bitstream: item name/detail pairs, the whole-image
description, word-budget enforcement, and the item-count budget rule.
"""

from __future__ import annotations

import math
import logging
import struct
import zlib
from dataclasses import dataclass

from .errors import ConstraintError, FormatError, TruncatedError

log = logging.getLogger(__name__)

MAX_ITEMS = 3
NAME_WORD_BUDGET = 3
DETAIL_WORD_BUDGET = 10
DETAIL_ALL_WORD_BUDGET = 60  # hard cap; soft target is ~50 words

# Back-solved so the default budget reproduces the published operating
# point: 0.225 * 12.5 = 2.8125 -> item cap 3.
DEFAULT_F_RATIO = 0.225
DEFAULT_EXPECTED_ITEMS = 12.5

# Limit for decompressing a semantic section (intrinsic sub-layout maximum
# is ~196 KiB; anything past this is a malicious stream).
_DECOMPRESS_CAP = 1 << 20


def words(text: str) -> list[str]:
    """Words are maximal runs of non-whitespace; hyphenated tokens count once."""
    return text.split()


def _clean(text: str) -> str:
    """Strip control characters and collapse whitespace runs to single spaces."""
    text = "".join(" " if (ord(c) < 0x20 or ord(c) == 0x7F) else c for c in text)
    return " ".join(text.split())


def _fit_words(text: str, word_budget: int, byte_budget: int) -> str:
    """Truncate to the word budget, then drop/cut words until the UTF-8
    encoding fits the container length field."""
    kept = words(text)[:word_budget]
    while kept and len(" ".join(kept).encode("utf-8")) > byte_budget:
        if len(kept) == 1:
            raw = kept[0].encode("utf-8")[:byte_budget]
            # back off to a codepoint boundary
            while raw and (raw[-1] & 0xC0) == 0x80:
                raw = raw[:-1]
            kept[0] = raw.decode("utf-8")
            break
        kept.pop()
    return " ".join(kept)


@dataclass(frozen=True)
class SemanticPayload:
    """Names/details for up to three items plus the whole-image description."""

    items: tuple[tuple[str, str], ...] = ()
    detail_all: str = ""

    @property
    def j(self) -> int:
        return len(self.items)

    def validate(self) -> None:
        if self.j > MAX_ITEMS:
            raise ConstraintError(f"semantic payload has {self.j} items, cap is {MAX_ITEMS}")
        for idx, (name, detail) in enumerate(self.items):
            _validate_text(f"item {idx} name", name, NAME_WORD_BUDGET, 255)
            _validate_text(f"item {idx} detail", detail, DETAIL_WORD_BUDGET, 255)
        _validate_text("detail_all", self.detail_all, DETAIL_ALL_WORD_BUDGET, 65535)


def _validate_text(what: str, text: str, word_budget: int, byte_budget: int) -> None:
    if any(ord(c) < 0x20 or ord(c) == 0x7F for c in text):
        raise ConstraintError(f"{what} contains control characters")
    n = len(words(text))
    if n > word_budget:
        raise ConstraintError(f"{what} has {n} words, budget is {word_budget}")
    if len(text.encode("utf-8")) > byte_budget:
        raise ConstraintError(f"{what} exceeds {byte_budget} encoded bytes")


@dataclass(frozen=True)
class ItemBudget:
    """Item-count budget: threshold = frequency ratio x expected item count."""

    f_ratio: float
    expected_items: float
    s_th: float
    j_max: int


def item_budget(f_ratio: float = DEFAULT_F_RATIO,
                expected_items: float = DEFAULT_EXPECTED_ITEMS) -> ItemBudget:
    """Derive the item threshold and cap from the two budget knobs.

    ``s_th = f_ratio * expected_items``; the cap is ``ceil(s_th)`` clamped
    to [0, 3]. Defaults reproduce s_th = 2.8125 -> cap 3.
    """
    for label, v in (("f_ratio", f_ratio), ("expected_items", expected_items)):
        if not math.isfinite(v) or v < 0:
            raise ValueError(f"{label} must be finite and non-negative, got {v!r}")
    s_th = f_ratio * expected_items
    j_max = min(max(math.ceil(s_th), 0), MAX_ITEMS)
    return ItemBudget(f_ratio=f_ratio, expected_items=expected_items, s_th=s_th, j_max=j_max)


def sanitize(raw_items: list[tuple[str, str]] | tuple[tuple[str, str], ...],
             raw_detail_all: str,
             budget: ItemBudget | None = None) -> SemanticPayload:
    """Normalize untrusted describer output into a valid payload.

    Keeps at most ``budget.j_max`` items in listed order (the describer lists
    salient items first), truncates every field to its word budget, and
    normalizes whitespace. Total: never raises on any text input.
    """
    if budget is None:
        budget = item_budget()
    kept = []
    for name, detail in list(raw_items)[: budget.j_max]:
        kept.append((
            _fit_words(_clean(name), NAME_WORD_BUDGET, 255),
            _fit_words(_clean(detail), DETAIL_WORD_BUDGET, 255),
        ))
    detail_all = _fit_words(_clean(raw_detail_all), DETAIL_ALL_WORD_BUDGET, 65535)
    if not detail_all:
        log.warning("sanitize: empty whole-image description")
    return SemanticPayload(items=tuple(kept), detail_all=detail_all)


def pack_text(payload: SemanticPayload, compress: bool = False) -> bytes:
    """Serialize the payload to the MSCB semantic sub-layout.

    With ``compress`` the sub-layout bytes are wrapped in a zlib (RFC 1950)
    stream at level 9, the format's canonical text compressor.
    """
    payload.validate()
    out = bytearray()
    out.append(payload.j)
    for name, detail in payload.items:
        nb = name.encode("utf-8")
        db = detail.encode("utf-8")
        out.append(len(nb))
        out += nb
        out.append(len(db))
        out += db
    ab = payload.detail_all.encode("utf-8")
    out += struct.pack("<H", len(ab))
    out += ab
    raw = bytes(out)
    return zlib.compress(raw, 9) if compress else raw


def unpack_text(data: bytes, compressed: bool = False) -> SemanticPayload:
    """Inverse of :func:`pack_text`. Rejects malformed or trailing bytes."""
    if compressed:
        data = decompress_section(data)
    pos = 0

    def take(n: int, what: str) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise TruncatedError(f"semantic section truncated in {what}")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    def take_str(n: int, what: str) -> str:
        try:
            return take(n, what).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{what} is not valid UTF-8") from exc

    j = take(1, "item count")[0]
    if j > MAX_ITEMS:
        raise ConstraintError(f"semantic section declares {j} items, cap is {MAX_ITEMS}")
    items = []
    for idx in range(j):
        name = take_str(take(1, f"item {idx} name length")[0], f"item {idx} name")
        detail = take_str(take(1, f"item {idx} detail length")[0], f"item {idx} detail")
        items.append((name, detail))
    (alen,) = struct.unpack("<H", take(2, "detail_all length"))
    detail_all = take_str(alen, "detail_all")
    if pos != len(data):
        raise FormatError("trailing bytes after semantic sub-layout")
    payload = SemanticPayload(items=tuple(items), detail_all=detail_all)
    payload.validate()
    return payload


def decompress_section(data: bytes) -> bytes:
    """Bounded zlib decompression for the semantic section."""
    d = zlib.decompressobj()
    try:
        raw = d.decompress(data, _DECOMPRESS_CAP)
    except zlib.error as exc:
        raise FormatError(f"bad compressed semantic section: {exc}") from exc
    if not d.eof or d.unconsumed_tail:
        raise FormatError("compressed semantic section is oversized or unterminated")
    if d.unused_data:
        raise FormatError("trailing bytes after compressed semantic stream")
    return raw
