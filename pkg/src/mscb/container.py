"""Bit-exact serialization, parsing, and rate accounting for the MSCB v1
container.

Layout (little-endian integers):
  magic "MSCB" | version u8 | level u8 | flags u8 | width u16 | height u16 |
  sem_len u16, semantic sub-layout (optionally a zlib stream, flags bit 0) |
  J_maps u8, per map: rows u8, cols u8, packed row-major MSB-first bits |
  pixel section (flags bit 1: payload_len u32 + opaque blob; else
  ds_w u8, ds_h u8, bits u8 + packed indices) | crc32 u32.

The CRC is the standard reflected CRC-32 (poly 0x04C11DB7, init/xor
0xFFFFFFFF) over every preceding byte.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field

from .errors import (BadMagicError, ConstraintError, CrcMismatchError,
                     TruncatedError, UnsupportedVersionError)
from .maps import BinaryMap
from .pixel import PixelPayload
from .semantic import (SemanticPayload, decompress_section, pack_text,
                       unpack_text)

MAGIC = b"MSCB"
VERSION = 1
MAX_DIM = 65535

FLAG_TEXT_COMPRESSED = 0x01
FLAG_PIXEL_NEURAL = 0x02

_HEADER = struct.Struct("<4sBBBHH")


@dataclass
class MiscContainer:
    """The complete decoded artifact; serialize/parse are exact inverses."""

    level: int
    width: int
    height: int
    semantic: SemanticPayload
    maps: tuple[BinaryMap, ...]
    pixel: PixelPayload
    text_compressed: bool = False
    version: int = VERSION
    # On-wire semantic bytes from parse, keyed by the raw sub-layout they
    # encode, so foreign-but-valid compressed streams re-serialize verbatim.
    _sem_cache: tuple[bytes, bytes] | None = field(
        default=None, compare=False, repr=False)

    @property
    def flags(self) -> int:
        bits = 0
        if self.text_compressed:
            bits |= FLAG_TEXT_COMPRESSED
        if self.pixel.branch == "neural":
            bits |= FLAG_PIXEL_NEURAL
        return bits

    def validate(self) -> None:
        if self.version != VERSION:
            raise UnsupportedVersionError(f"unsupported container version {self.version}")
        if self.level not in (1, 2, 3):
            raise ConstraintError(f"level must be 1, 2, or 3, got {self.level}")
        for label, v in (("width", self.width), ("height", self.height)):
            if not (1 <= v <= MAX_DIM):
                raise ConstraintError(f"{label} must be in 1..{MAX_DIM}, got {v}")
        self.semantic.validate()
        if len(self.maps) != self.semantic.j:
            raise ConstraintError(
                f"{len(self.maps)} maps for {self.semantic.j} semantic items")
        if self.level == 3 and self.semantic.j != 0:
            raise ConstraintError("level 3 containers carry no items")
        for m in self.maps:
            m.check_wire_dims()
        self.pixel.validate()


def serialize(container: MiscContainer) -> bytes:
    """Serialize to MSCB bytes; rejects invariant violations by name."""
    container.validate()
    out = bytearray()
    out += _HEADER.pack(MAGIC, container.version, container.level,
                        container.flags, container.width, container.height)

    raw = pack_text(container.semantic, compress=False)
    if container.text_compressed:
        cache = container._sem_cache
        sem = cache[1] if cache is not None and cache[0] == raw else zlib.compress(raw, 9)
    else:
        sem = raw
    if len(sem) > 0xFFFF:
        raise ConstraintError("semantic section exceeds 65535 bytes")
    out += struct.pack("<H", len(sem))
    out += sem

    out.append(len(container.maps))
    for m in container.maps:
        out.append(m.rows)
        out.append(m.cols)
        out += m.packed

    pixel = container.pixel
    if pixel.branch == "neural":
        out += struct.pack("<I", len(pixel.blob))
        out += pixel.blob
    elif pixel.branch == "quantized":
        out += bytes((pixel.ds_w, pixel.ds_h, pixel.bits_per_channel))
        out += pixel.packed
    else:  # empty marker: all-zero quantized sub-header, no payload
        out += bytes((0, 0, 0))

    out += struct.pack("<I", zlib.crc32(bytes(out)))
    return bytes(out)


class _Reader:
    """Bounds-checked cursor; all reads are validated against the buffer."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedError(f"container truncated in {what}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u8(self, what: str) -> int:
        return self.take(1, what)[0]

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def parse(data: bytes) -> MiscContainer:
    """Parse MSCB bytes into a validated container.

    Total on arbitrary input: returns a container or raises a typed
    FormatError subclass; never reads past declared lengths.
    """
    r = _Reader(data)
    magic = r.take(4, "magic")
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    version = r.u8("version")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported container version {version}")
    level = r.u8("level")
    flags = r.u8("flags")
    if flags & ~(FLAG_TEXT_COMPRESSED | FLAG_PIXEL_NEURAL):
        raise ConstraintError(f"reserved flag bits set: {flags:#04x}")
    width = r.u16("width")
    height = r.u16("height")

    sem_len = r.u16("semantic length")
    sem_bytes = r.take(sem_len, "semantic section")
    compressed = bool(flags & FLAG_TEXT_COMPRESSED)
    if compressed:
        raw = decompress_section(sem_bytes)
        semantic = unpack_text(raw)
        cache = (raw, sem_bytes)
    else:
        semantic = unpack_text(sem_bytes)
        cache = None

    j_maps = r.u8("map count")
    if j_maps != semantic.j:
        raise ConstraintError(f"{j_maps} maps for {semantic.j} semantic items")
    maps = []
    for i in range(j_maps):
        rows = r.u8(f"map {i} rows")
        cols = r.u8(f"map {i} cols")
        bmap = _parse_map(r, i, rows, cols)
        maps.append(bmap)

    if flags & FLAG_PIXEL_NEURAL:
        blob_len = r.u32("pixel payload length")
        blob = r.take(blob_len, "pixel payload")
        pixel = PixelPayload(branch="neural", blob=blob)
    else:
        ds_w = r.u8("pixel ds_w")
        ds_h = r.u8("pixel ds_h")
        bits = r.u8("pixel bits_per_channel")
        if ds_w == 0 and ds_h == 0 and bits == 0:
            pixel = PixelPayload(branch="empty")
        else:
            if not (1 <= bits <= 8):
                raise ConstraintError(f"bits_per_channel must be in 1..8, got {bits}")
            if ds_w == 0 or ds_h == 0:
                raise ConstraintError("quantized payload needs ds_w, ds_h >= 1")
            n = (ds_w * ds_h * 3 * bits + 7) // 8
            packed = r.take(n, "pixel payload")
            pixel = PixelPayload(branch="quantized", ds_w=ds_w, ds_h=ds_h,
                                 bits_per_channel=bits, packed=packed,
                                 x=max(width, height) / max(ds_w, ds_h))

    body_end = r.pos
    stored_crc = r.u32("crc")
    if r.pos != len(data):
        raise ConstraintError(f"{len(data) - r.pos} trailing bytes after crc")
    actual = zlib.crc32(data[:body_end])
    if stored_crc != actual:
        raise CrcMismatchError(f"crc mismatch: stored {stored_crc:#010x}, "
                               f"computed {actual:#010x}")

    container = MiscContainer(level=level, width=width, height=height,
                              semantic=semantic, maps=tuple(maps), pixel=pixel,
                              text_compressed=compressed, version=version,
                              _sem_cache=cache)
    container.validate()
    return container


def _parse_map(r: _Reader, i: int, rows: int, cols: int) -> BinaryMap:
    for d in (rows, cols):
        if not (8 <= d <= 16):
            raise ConstraintError(f"map {i} dims {rows}x{cols} outside 8..16")
    packed = r.take((rows * cols + 7) // 8, f"map {i} bits")
    try:
        return BinaryMap(rows=rows, cols=cols, packed=packed)
    except ValueError as exc:
        raise ConstraintError(f"map {i}: {exc}") from exc


@dataclass(frozen=True)
class RateReport:
    """Exact bit accounting of a serialized container."""

    total_bits: int
    section_bits: dict[str, int]
    bpp: float
    per_map_bits: tuple[int, ...] = ()


def rate_report(container: MiscContainer) -> RateReport:
    """Bit counts per section, matching the serialized layout exactly."""
    blob = serialize(container)
    header = _HEADER.size * 8

    raw = pack_text(container.semantic, compress=False)
    if container.text_compressed:
        cache = container._sem_cache
        sem = cache[1] if cache is not None and cache[0] == raw else zlib.compress(raw, 9)
    else:
        sem = raw
    semantic = 16 + 8 * len(sem)

    per_map = tuple(16 + 8 * len(m.packed) for m in container.maps)
    maps_bits = 8 + sum(per_map)

    pixel = container.pixel
    if pixel.branch == "neural":
        pixel_bits = 32 + 8 * len(pixel.blob)
    elif pixel.branch == "quantized":
        pixel_bits = 24 + 8 * len(pixel.packed)
    else:
        pixel_bits = 24

    sections = {"header": header, "semantic": semantic, "maps": maps_bits,
                "pixel": pixel_bits, "crc": 32}
    total = 8 * len(blob)
    assert sum(sections.values()) == total, "section accounting out of sync"
    return RateReport(total_bits=total, section_bits=sections,
                      bpp=total / (container.width * container.height),
                      per_map_bits=per_map)
