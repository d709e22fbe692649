"""Ultra-low bitrate semantic image compression toolkit.

The bitstream carries three kinds of content: short item texts with coarse
binary position maps, a whole-image description, and an extreme pixel
payload. The decoder reconstructs a reference canvas from the pixel
payload, then runs masked generation passes per item and one global
enhancement pass.
"""

from .backend import BackendHandle, DescribeResult, MockBackend, RemoteBackend
from .container import MiscContainer, RateReport, parse, rate_report, serialize
from .errors import (BackendError, BadMagicError, ConstraintError,
                     CrcMismatchError, FormatError, MscbError, SchemaError,
                     TransportError, TruncatedError, UnsupportedVersionError)
from .maps import (BinaryMap, FeatureTensor, binarize_pool, feature_product,
                   raw_map, redundancy_bias, upsample_mask)
from .pipeline import (AblationFlags, DecodeTrace, LevelPolicy, ablation_sweep,
                       decode, decode_traced, encode, roundtrip_report)
from .pixel import (CodecPolicy, PixelPayload, bicubic_upsample, choose_branch,
                    decode_pixels, dequantize_values, downsample, encode_pixels,
                    quantize_values)
from .semantic import ItemBudget, SemanticPayload, item_budget, pack_text, sanitize, unpack_text

__version__ = "0.1.0"

__all__ = [
    "AblationFlags", "BackendError", "BackendHandle", "BadMagicError",
    "BinaryMap", "CodecPolicy", "ConstraintError", "CrcMismatchError",
    "DecodeTrace", "DescribeResult", "FeatureTensor", "FormatError",
    "ItemBudget", "LevelPolicy", "MiscContainer", "MockBackend", "MscbError",
    "PixelPayload", "RateReport", "RemoteBackend", "SchemaError",
    "SemanticPayload", "TransportError", "TruncatedError",
    "UnsupportedVersionError", "ablation_sweep", "bicubic_upsample",
    "binarize_pool", "choose_branch", "decode", "decode_pixels",
    "decode_traced", "dequantize_values", "downsample", "encode",
    "encode_pixels", "feature_product", "item_budget", "pack_text", "parse",
    "quantize_values", "rate_report", "raw_map", "redundancy_bias",
    "roundtrip_report", "sanitize", "serialize", "unpack_text",
    "upsample_mask",
]
