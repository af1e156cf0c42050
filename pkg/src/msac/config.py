"""Codec configuration and the named presets.

A config fully determines the computation graph: encoder/decoder rates,
quantizer strides, codebook geometry and channel widths. Presets cover the
supported operating points; any other combination can be built directly or
loaded from a JSON file.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field, fields


@dataclass(frozen=True)
class CodecConfig:
    """Hyperparameters of one codec instance.

    ``encoder_rates`` are the per-stage temporal downsample factors; their
    product is the hop (audio samples per latent frame) and must equal the
    product of ``decoder_rates``. ``vq_strides`` are the per-level temporal
    strides of the quantizer cascade, coarsest first.
    """

    sample_rate: int
    encoder_rates: tuple[int, ...]
    decoder_rates: tuple[int, ...]
    vq_strides: tuple[int, ...]
    codebook_size: int = 4096
    codeword_dim: int = 8
    base_channels: int = 32
    channel_growth: int = 2
    attention_enabled: bool = True
    attention_window: int = 32
    noise_enabled: bool = True
    noise_per_element: bool = False
    activation: str = "snake"
    lookup_normalized: bool = False
    shared_projections: bool = False

    def __post_init__(self):
        object.__setattr__(self, "encoder_rates", tuple(int(r) for r in self.encoder_rates))
        object.__setattr__(self, "decoder_rates", tuple(int(r) for r in self.decoder_rates))
        object.__setattr__(self, "vq_strides", tuple(int(w) for w in self.vq_strides))
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not self.encoder_rates or not self.decoder_rates:
            raise ValueError("encoder_rates and decoder_rates must be non-empty")
        if any(r < 1 for r in self.encoder_rates + self.decoder_rates):
            raise ValueError("all encoder/decoder rates must be >= 1")
        if math.prod(self.encoder_rates) != math.prod(self.decoder_rates):
            raise ValueError(
                "encoder_rates and decoder_rates must have equal products, got "
                f"{math.prod(self.encoder_rates)} vs {math.prod(self.decoder_rates)}"
            )
        if not self.vq_strides or any(w < 1 for w in self.vq_strides):
            raise ValueError("vq_strides must be non-empty positive integers")
        if self.codebook_size < 1 or self.codeword_dim < 1:
            raise ValueError("codebook_size and codeword_dim must be >= 1")
        if self.base_channels < 1 or self.channel_growth < 1:
            raise ValueError("base_channels and channel_growth must be >= 1")
        if self.attention_window < 1:
            raise ValueError("attention_window must be >= 1")
        if self.activation not in ("snake", "leaky_relu"):
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def hop(self) -> int:
        """Audio samples per latent frame."""
        return math.prod(self.encoder_rates)

    @property
    def num_levels(self) -> int:
        return len(self.vq_strides)

    @property
    def stride_lcm(self) -> int:
        return math.lcm(*self.vq_strides)

    @property
    def latent_channels(self) -> int:
        return self.base_channels * self.channel_growth ** len(self.encoder_rates)

    @property
    def bits_per_token(self) -> int:
        # ceil(log2 K), floored at one bit so tokens stay addressable
        return max(1, (self.codebook_size - 1).bit_length())

    def token_rates(self) -> list[float]:
        """Tokens per second of each quantizer level, coarsest first."""
        return [self.sample_rate / (self.hop * w) for w in self.vq_strides]

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "CodecConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(d)
        for key in ("encoder_rates", "decoder_rates", "vq_strides"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)

    def canonical_json(self) -> str:
        """Stable serialization used for hashing and the weight file."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> bytes:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).digest()[:16]


PRESETS: dict[str, CodecConfig] = {
    "general-44k": CodecConfig(
        sample_rate=44100,
        encoder_rates=(2, 3, 8, 8),
        decoder_rates=(8, 8, 3, 2),
        vq_strides=(8, 4, 2, 1),
    ),
    "general-32k": CodecConfig(
        sample_rate=32000,
        encoder_rates=(2, 3, 8, 8),
        decoder_rates=(8, 8, 3, 2),
        vq_strides=(8, 4, 2, 1),
    ),
    "speech-24k": CodecConfig(
        sample_rate=24000,
        encoder_rates=(2, 4, 8, 8),
        decoder_rates=(8, 8, 4, 2),
        vq_strides=(4, 2, 1),
        attention_enabled=False,
    ),
    "ablation-single-scale": CodecConfig(
        sample_rate=44100,
        encoder_rates=(2, 4, 8, 8),
        decoder_rates=(8, 8, 4, 2),
        vq_strides=(1, 1, 1),
    ),
}


def preset(name: str) -> CodecConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None


def preset_name_of(config: CodecConfig) -> str | None:
    """Name of the preset equal to ``config``, or None."""
    for name, cfg in PRESETS.items():
        if cfg == config:
            return name
    return None


def load_config(path) -> CodecConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return CodecConfig.from_dict(json.load(fh))
