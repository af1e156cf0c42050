"""Serialized token streams and bitrate accounting.

Stream layout, integers little-endian:

    magic  b"MSBS"
    u32    format version (currently 1)
    u8     config kind: 0 = named preset, 1 = config hash
    24s    config id (preset name or 16-byte hash, zero-padded)
    u32    sample rate
    u64    original sample count (decode trims back to this)
    u32    latent frame count T
    u8     bits per token B
    u8     level count
    u16[]  per-level stride

The payload concatenates levels coarsest first; each token occupies B bits,
most significant bit first, and the final byte is zero-padded. Nonzero pad
bits are treated as corruption.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .config import CodecConfig, preset_name_of
from .rvq import MultiScaleCodes

MAGIC = b"MSBS"
VERSION = 1
KIND_PRESET = 0
KIND_HASH = 1
_ID_BYTES = 24
_FIXED = struct.Struct(f"<4sIB{_ID_BYTES}sIQIBB")


class BitstreamError(ValueError):
    pass


@dataclass(frozen=True)
class BitstreamHeader:
    version: int
    config_kind: int
    config_id: bytes
    sample_rate: int
    original_sample_count: int
    latent_frames: int
    bits_per_token: int
    strides: tuple[int, ...]

    def __post_init__(self):
        if self.config_kind not in (KIND_PRESET, KIND_HASH):
            raise BitstreamError(f"unknown config kind {self.config_kind}")
        if len(self.config_id) > _ID_BYTES:
            raise BitstreamError("config id longer than header field")
        if not 1 <= self.bits_per_token <= 31:
            raise BitstreamError("bits per token must be in [1, 31]")
        if not self.strides:
            raise BitstreamError("header needs at least one level")
        for w in self.strides:
            if self.latent_frames % w:
                raise BitstreamError(f"latent frame count {self.latent_frames} "
                                     f"not divisible by stride {w}")

    @property
    def num_levels(self) -> int:
        return len(self.strides)

    @property
    def level_lengths(self) -> list[int]:
        return [self.latent_frames // w for w in self.strides]

    @property
    def preset_name(self) -> str | None:
        if self.config_kind != KIND_PRESET:
            return None
        return self.config_id.rstrip(b"\x00").decode("utf-8")


def make_header(config: CodecConfig, codes: MultiScaleCodes,
                original_sample_count: int) -> BitstreamHeader:
    """Derive a header from a config and the codes it produced.

    Known preset configs are identified by name; anything else carries the
    config hash so decoders can verify they were handed the right config.
    """
    if codes.num_levels != config.num_levels:
        raise BitstreamError(f"codes have {codes.num_levels} levels, "
                             f"config has {config.num_levels}")
    latent = codes.level_lengths[0] * config.vq_strides[0]
    name = preset_name_of(config)
    if name is not None:
        kind, config_id = KIND_PRESET, name.encode("utf-8")
    else:
        kind, config_id = KIND_HASH, config.config_hash()
    return BitstreamHeader(
        version=VERSION, config_kind=kind, config_id=config_id,
        sample_rate=config.sample_rate, original_sample_count=original_sample_count,
        latent_frames=latent, bits_per_token=config.bits_per_token,
        strides=config.vq_strides,
    )


def header_matches_config(header: BitstreamHeader, config: CodecConfig) -> bool:
    if header.config_kind == KIND_PRESET:
        return preset_name_of(config) == header.preset_name
    return config.config_hash() == header.config_id


def _pack_tokens(tokens: np.ndarray, bits: int) -> np.ndarray:
    shifts = np.arange(bits - 1, -1, -1, dtype=np.int64)
    expanded = ((tokens.astype(np.int64)[:, None] >> shifts) & 1).astype(np.uint8)
    return expanded.reshape(-1)


def pack(codes: MultiScaleCodes, header: BitstreamHeader) -> bytes:
    """Header plus MSB-first token payload, coarsest level first."""
    if codes.num_levels != header.num_levels:
        raise BitstreamError(f"codes have {codes.num_levels} levels, "
                             f"header says {header.num_levels}")
    if codes.level_lengths != header.level_lengths:
        raise BitstreamError(f"level lengths {codes.level_lengths} do not match "
                             f"header {header.level_lengths}")
    limit = 1 << header.bits_per_token
    bit_groups = []
    for i, level in enumerate(codes.levels):
        if level.size and (level.min() < 0 or level.max() >= limit):
            raise BitstreamError(f"level {i} has tokens outside [0, {limit})")
        bit_groups.append(_pack_tokens(level, header.bits_per_token))
    bits = np.concatenate(bit_groups) if bit_groups else np.zeros(0, np.uint8)
    payload = np.packbits(bits).tobytes() if bits.size else b""

    head = _FIXED.pack(MAGIC, header.version, header.config_kind,
                       header.config_id.ljust(_ID_BYTES, b"\x00"),
                       header.sample_rate, header.original_sample_count,
                       header.latent_frames, header.bits_per_token,
                       header.num_levels)
    head += struct.pack(f"<{header.num_levels}H", *header.strides)
    return head + payload


def unpack(blob: bytes) -> tuple[MultiScaleCodes, BitstreamHeader]:
    """Exact inverse of pack. Rejects corruption instead of guessing."""
    if len(blob) < _FIXED.size:
        raise BitstreamError(f"stream truncated inside fixed header "
                             f"at byte {len(blob)}")
    magic, version, kind, config_id, rate, original, latent, bits, n_levels = \
        _FIXED.unpack_from(blob)
    if magic != MAGIC:
        raise BitstreamError("not a token stream (bad magic)")
    if version != VERSION:
        raise BitstreamError(f"unsupported stream version {version}, "
                             f"expected {VERSION}")
    stride_end = _FIXED.size + 2 * n_levels
    if len(blob) < stride_end:
        raise BitstreamError(f"stream truncated inside stride table "
                             f"at byte {len(blob)}")
    strides = struct.unpack_from(f"<{n_levels}H", blob, _FIXED.size)
    # hashes may contain zero bytes anywhere, so only names get the pad stripped
    trimmed = config_id.rstrip(b"\x00") if kind == KIND_PRESET else config_id[:16]
    header = BitstreamHeader(
        version=version, config_kind=kind, config_id=trimmed,
        sample_rate=rate, original_sample_count=original, latent_frames=latent,
        bits_per_token=bits, strides=tuple(int(w) for w in strides),
    )

    lengths = header.level_lengths
    total_bits = bits * sum(lengths)
    needed = stride_end + (total_bits + 7) // 8
    if len(blob) < needed:
        raise BitstreamError(f"token payload truncated at byte {len(blob)}, "
                             f"need {needed} bytes")
    if len(blob) > needed:
        raise BitstreamError(f"{len(blob) - needed} unexpected trailing bytes")

    raw = np.frombuffer(blob, dtype=np.uint8, offset=stride_end)
    all_bits = np.unpackbits(raw)
    if np.any(all_bits[total_bits:]):
        raise BitstreamError("nonzero padding bits, stream is corrupt")
    shifts = np.arange(bits - 1, -1, -1, dtype=np.int64)
    tokens = (all_bits[:total_bits].reshape(-1, bits).astype(np.int64)
              << shifts).sum(axis=1)
    levels, pos = [], 0
    for n in lengths:
        levels.append(tokens[pos:pos + n].astype(np.int32))
        pos += n
    return MultiScaleCodes(levels), header


def bitrate(config: CodecConfig) -> float:
    """Bits per second of the token stream, exact."""
    per_frame = sum(1.0 / w for w in config.vq_strides)
    return config.bits_per_token * config.sample_rate / config.hop * per_frame


def format_bitrate(bps: float) -> str:
    """Human display: whole bps under 1000, otherwise one-decimal kbps."""
    if bps < 1000.0:
        return f"{round(bps)} bps"
    return f"{bps / 1000.0:.1f} kbps"
