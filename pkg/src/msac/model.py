"""Encoder/decoder computation graph around the multi-scale quantizer.

The encoder is a cascade of strided stages (three dilated residual units,
then a downsampling conv); the decoder mirrors it with transposed convs,
each followed by a noise block when enabled. Spatial convolutions are
depthwise except the waveform embedding, the output projection and the
decoder upsampling convs; channel mixing happens in 1x1 pointwise convs.
A single local windowed attention layer sits at the bottleneck on each
side when enabled.

A built codec is immutable: encode/decode never mutate parameters and are
safe to call concurrently.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import ops
from .audio import AudioBuffer
from .config import CodecConfig
from .ops import ConvSpec, conv1d, linear, local_windowed_attention, transposed_conv1d
from .rvq import Codebook, LevelConfig, MultiScaleCodes, QuantizeResult, dequantize, quantize

RESIDUAL_DILATIONS = (1, 3, 9)
RESIDUAL_KERNEL = 7
EMBED_KERNEL = 7
LEAKY_SLOPE = 0.01


@dataclass(frozen=True)
class ConvInfo:
    """Introspection record for one convolution in the graph."""

    name: str
    role: str
    in_channels: int
    out_channels: int
    kernel_size: int
    stride: int
    groups: int
    depthwise: bool
    transposed: bool


def _conv(rng, in_c, out_c, kernel, stride=1, dilation=1, groups=1, pad=(0, 0)) -> ConvSpec:
    fan_in = (in_c // groups) * kernel
    weight = rng.normal(0.0, 1.0 / math.sqrt(fan_in), (out_c, in_c // groups, kernel))
    return ConvSpec(
        in_channels=in_c, out_channels=out_c, kernel_size=kernel,
        weight=weight.astype(np.float32), bias=np.zeros(out_c, dtype=np.float32),
        stride=stride, dilation=dilation, groups=groups, pad_l=pad[0], pad_r=pad[1],
    )


def _down_geometry(rate: int) -> tuple[int, int, int]:
    """(kernel, pad_l, pad_r) of a strided conv halting at exactly T/rate."""
    if rate == 1:
        return 3, 1, 1
    half = math.ceil(rate / 2)
    return 2 * rate, half, half


def _up_geometry(rate: int) -> tuple[int, int, int]:
    """(kernel, pad_l, pad_r) of a transposed conv producing exactly T*rate."""
    if rate == 1:
        return 3, 1, 1
    return 2 * rate, math.ceil(rate / 2), rate - math.ceil(rate / 2)


class Activation:
    """Per-channel snake (learnable alpha) or parameter-free leaky ReLU."""

    def __init__(self, kind: str, channels: int):
        self.kind = kind
        self.alpha = np.ones(channels, dtype=np.float32) if kind == "snake" else None

    def forward(self, x):
        if self.kind == "snake":
            return ops.snake(x, self.alpha)
        return ops.leaky_relu(x, LEAKY_SLOPE)

    def named_params(self, prefix):
        if self.alpha is not None:
            yield f"{prefix}.alpha", self.alpha


class ResidualUnit:
    """Dilated depthwise conv plus pointwise mixing, with identity skip."""

    def __init__(self, rng, channels: int, dilation: int, activation: str):
        pad = (RESIDUAL_KERNEL - 1) * dilation // 2
        self.act1 = Activation(activation, channels)
        self.conv_dw = _conv(rng, channels, channels, RESIDUAL_KERNEL,
                             dilation=dilation, groups=channels, pad=(pad, pad))
        self.act2 = Activation(activation, channels)
        self.conv_pw = _conv(rng, channels, channels, 1)

    def forward(self, x):
        y = self.act1.forward(x)
        y = conv1d(y, self.conv_dw)
        y = self.act2.forward(y)
        y = conv1d(y, self.conv_pw)
        return x + y

    def named_params(self, prefix):
        yield from self.act1.named_params(f"{prefix}.act1")
        yield f"{prefix}.conv_dw.weight", self.conv_dw.weight
        yield f"{prefix}.conv_dw.bias", self.conv_dw.bias
        yield from self.act2.named_params(f"{prefix}.act2")
        yield f"{prefix}.conv_pw.weight", self.conv_pw.weight
        yield f"{prefix}.conv_pw.bias", self.conv_pw.bias

    def conv_entries(self, prefix):
        yield f"{prefix}.conv_dw", "residual", self.conv_dw, False
        yield f"{prefix}.conv_pw", "pointwise", self.conv_pw, False


class AttentionLayer:
    """Residual single-head local windowed attention."""

    def __init__(self, rng, channels: int, window: int):
        std = 1.0 / math.sqrt(channels)
        self.window = window
        self.wq = rng.normal(0.0, std, (channels, channels)).astype(np.float32)
        self.wk = rng.normal(0.0, std, (channels, channels)).astype(np.float32)
        self.wv = rng.normal(0.0, std, (channels, channels)).astype(np.float32)
        self.wo = rng.normal(0.0, std, (channels, channels)).astype(np.float32)

    def forward(self, x):
        attended = local_windowed_attention(x, self.wq, self.wk, self.wv, self.window)
        return x + linear(attended, self.wo)

    def named_params(self, prefix):
        yield f"{prefix}.wq", self.wq
        yield f"{prefix}.wk", self.wk
        yield f"{prefix}.wv", self.wv
        yield f"{prefix}.wo", self.wo


@dataclass
class NoiseBlockParams:
    """Pointwise scale projection of the decoder noise injection."""

    weight: np.ndarray  # (C, C)

    def __post_init__(self):
        self.weight = np.ascontiguousarray(self.weight, dtype=np.float32)
        if self.weight.ndim != 2 or self.weight.shape[0] != self.weight.shape[1]:
            raise ValueError("noise scale projection must be square (C, C)")
        if not np.all(np.isfinite(self.weight)):
            raise ValueError("noise scale projection must be finite")


def noise_block(x, params: NoiseBlockParams, eps) -> np.ndarray:
    """x + scale(x) * eps with eps per frame (T,) or per element (T, C).

    ``eps=None`` means zero noise and returns the input unchanged.
    """
    x = ops.as_frames(x)
    if params.weight.shape[0] != x.shape[1]:
        raise ValueError(f"noise projection expects {params.weight.shape[0]} channels, "
                         f"got {x.shape[1]}")
    if eps is None:
        return x
    eps = np.asarray(eps, dtype=np.float32)
    if eps.shape == (x.shape[0],):
        eps = eps[:, None]
    elif eps.shape != x.shape:
        raise ValueError(f"eps shape {eps.shape} matches neither (T,) nor {x.shape}")
    return x + linear(x, params.weight) * eps


class EncoderStage:
    def __init__(self, rng, in_c: int, out_c: int, rate: int, activation: str):
        self.units = [ResidualUnit(rng, in_c, d, activation) for d in RESIDUAL_DILATIONS]
        self.act = Activation(activation, in_c)
        kernel, pad_l, pad_r = _down_geometry(rate)
        self.down_dw = _conv(rng, in_c, in_c, kernel, stride=rate, groups=in_c,
                             pad=(pad_l, pad_r))
        self.down_pw = _conv(rng, in_c, out_c, 1)

    def forward(self, x):
        for unit in self.units:
            x = unit.forward(x)
        x = self.act.forward(x)
        x = conv1d(x, self.down_dw)
        return conv1d(x, self.down_pw)

    def named_params(self, prefix):
        for i, unit in enumerate(self.units):
            yield from unit.named_params(f"{prefix}.unit{i}")
        yield from self.act.named_params(f"{prefix}.act")
        yield f"{prefix}.down_dw.weight", self.down_dw.weight
        yield f"{prefix}.down_dw.bias", self.down_dw.bias
        yield f"{prefix}.down_pw.weight", self.down_pw.weight
        yield f"{prefix}.down_pw.bias", self.down_pw.bias

    def conv_entries(self, prefix):
        for i, unit in enumerate(self.units):
            yield from unit.conv_entries(f"{prefix}.unit{i}")
        yield f"{prefix}.down_dw", "downsample", self.down_dw, False
        yield f"{prefix}.down_pw", "pointwise", self.down_pw, False


class Encoder:
    def __init__(self, rng, config: CodecConfig):
        act = config.activation
        self.embed = _conv(rng, 1, config.base_channels, EMBED_KERNEL, pad=(3, 3))
        self.stages = []
        c = config.base_channels
        for rate in config.encoder_rates:
            self.stages.append(EncoderStage(rng, c, c * config.channel_growth, rate, act))
            c *= config.channel_growth
        self.attn = (AttentionLayer(rng, c, config.attention_window)
                     if config.attention_enabled else None)
        self.out_channels = c

    def forward(self, x):
        x = conv1d(x, self.embed)
        for stage in self.stages:
            x = stage.forward(x)
        if self.attn is not None:
            x = self.attn.forward(x)
        return x

    def named_params(self, prefix="encoder"):
        yield f"{prefix}.embed.weight", self.embed.weight
        yield f"{prefix}.embed.bias", self.embed.bias
        for i, stage in enumerate(self.stages):
            yield from stage.named_params(f"{prefix}.stage{i}")
        if self.attn is not None:
            yield from self.attn.named_params(f"{prefix}.attn")

    def conv_entries(self, prefix="encoder"):
        yield f"{prefix}.embed", "embedding", self.embed, False
        for i, stage in enumerate(self.stages):
            yield from stage.conv_entries(f"{prefix}.stage{i}")


class DecoderStage:
    def __init__(self, rng, in_c: int, out_c: int, rate: int, activation: str,
                 noise: bool):
        self.act = Activation(activation, in_c)
        kernel, pad_l, pad_r = _up_geometry(rate)
        self.up = _conv(rng, in_c, out_c, kernel, stride=rate, pad=(pad_l, pad_r))
        self.noise = (NoiseBlockParams(rng.normal(0.0, 0.01, (out_c, out_c)))
                      if noise else None)
        self.noise_per_element = False
        self.units = [ResidualUnit(rng, out_c, d, activation) for d in RESIDUAL_DILATIONS]

    def forward(self, x, noise_rng):
        x = self.act.forward(x)
        x = transposed_conv1d(x, self.up)
        if self.noise is not None and noise_rng is not None:
            shape = x.shape if self.noise_per_element else x.shape[0]
            eps = noise_rng.standard_normal(shape, dtype=np.float32)
            x = noise_block(x, self.noise, eps)
        for unit in self.units:
            x = unit.forward(x)
        return x

    def named_params(self, prefix):
        yield from self.act.named_params(f"{prefix}.act")
        yield f"{prefix}.up.weight", self.up.weight
        yield f"{prefix}.up.bias", self.up.bias
        if self.noise is not None:
            yield f"{prefix}.noise.weight", self.noise.weight
        for i, unit in enumerate(self.units):
            yield from unit.named_params(f"{prefix}.unit{i}")

    def conv_entries(self, prefix):
        yield f"{prefix}.up", "upsample", self.up, True
        for i, unit in enumerate(self.units):
            yield from unit.conv_entries(f"{prefix}.unit{i}")


class Decoder:
    def __init__(self, rng, config: CodecConfig, latent_channels: int):
        act = config.activation
        self.embed = _conv(rng, latent_channels, latent_channels, EMBED_KERNEL,
                           groups=latent_channels, pad=(3, 3))
        self.attn = (AttentionLayer(rng, latent_channels, config.attention_window)
                     if config.attention_enabled else None)
        self.stages = []
        c = latent_channels
        for rate in config.decoder_rates:
            out_c = max(1, c // config.channel_growth)
            stage = DecoderStage(rng, c, out_c, rate, act, config.noise_enabled)
            stage.noise_per_element = config.noise_per_element
            self.stages.append(stage)
            c = out_c
        self.out_act = Activation(act, c)
        self.out_proj = _conv(rng, c, 1, EMBED_KERNEL, pad=(3, 3))

    def forward(self, z, noise_rng=None):
        x = conv1d(z, self.embed)
        if self.attn is not None:
            x = self.attn.forward(x)
        for stage in self.stages:
            x = stage.forward(x, noise_rng)
        x = self.out_act.forward(x)
        x = conv1d(x, self.out_proj)
        return np.tanh(x)

    def named_params(self, prefix="decoder"):
        yield f"{prefix}.embed.weight", self.embed.weight
        yield f"{prefix}.embed.bias", self.embed.bias
        if self.attn is not None:
            yield from self.attn.named_params(f"{prefix}.attn")
        for i, stage in enumerate(self.stages):
            yield from stage.named_params(f"{prefix}.stage{i}")
        yield from self.out_act.named_params(f"{prefix}.out_act")
        yield f"{prefix}.out_proj.weight", self.out_proj.weight
        yield f"{prefix}.out_proj.bias", self.out_proj.bias

    def conv_entries(self, prefix="decoder"):
        yield f"{prefix}.embed", "latent_embedding", self.embed, False
        for i, stage in enumerate(self.stages):
            yield from stage.conv_entries(f"{prefix}.stage{i}")
        yield f"{prefix}.out_proj", "output_projection", self.out_proj, False


class Codec:
    """A built codec: encoder, quantizer levels, decoder, and its config."""

    def __init__(self, config: CodecConfig, seed: int | None = 0):
        self.config = config
        rng = np.random.default_rng(0 if seed is None else seed)
        if seed is None:
            rng = _ZeroInit()
        self.encoder = Encoder(rng, config)
        c = self.encoder.out_channels
        self.levels: list[tuple[LevelConfig, Codebook]] = []
        shared = None
        for stride in config.vq_strides:
            cfg = LevelConfig(stride, config.codebook_size, config.codeword_dim)
            if config.shared_projections and shared is not None:
                in_proj, out_proj = shared
            else:
                in_proj = rng.normal(0.0, 1.0 / math.sqrt(c),
                                     (config.codeword_dim, c)).astype(np.float32)
                out_proj = rng.normal(0.0, 1.0 / math.sqrt(config.codeword_dim),
                                      (c, config.codeword_dim)).astype(np.float32)
                if config.shared_projections:
                    shared = (in_proj, out_proj)
            entries = rng.normal(0.0, 1.0, (config.codebook_size,
                                            config.codeword_dim)).astype(np.float32)
            self.levels.append((cfg, Codebook(entries, in_proj, out_proj)))
        self.decoder = Decoder(rng, config, c)

    # -- shape bookkeeping ------------------------------------------------

    def padded_length(self, sample_count: int) -> int:
        """Sample count after right-padding to a whole latent block."""
        block = self.config.hop * self.config.stride_lcm
        return math.ceil(sample_count / block) * block

    # -- main paths -------------------------------------------------------

    def encode(self, audio: AudioBuffer) -> MultiScaleCodes:
        """Waveform -> per-level tokens. Pads with trailing zeros as needed."""
        if audio.sample_rate != self.config.sample_rate:
            raise ValueError(f"sample rate mismatch: expected {self.config.sample_rate} Hz, "
                             f"got {audio.sample_rate} Hz")
        samples = np.asarray(audio.samples, dtype=np.float32).reshape(-1)
        if samples.size == 0:
            raise ValueError("cannot encode empty audio")
        padded = self.padded_length(samples.size)
        x = np.zeros((padded, 1), dtype=np.float32)
        x[:samples.size, 0] = samples
        z = self.encoder.forward(x)
        return self.quantize(z).codes

    def quantize(self, z) -> QuantizeResult:
        return quantize(z, self.levels, normalize_lookup=self.config.lookup_normalized)

    def decode(self, codes: MultiScaleCodes, noise_seed: int | None = None) -> AudioBuffer:
        """Tokens -> waveform of exactly latent_frames * hop samples.

        ``noise_seed=None`` disables noise injection (bit-deterministic);
        a seed makes the injected noise reproducible.
        """
        if codes.num_levels != len(self.levels):
            raise ValueError(f"codes have {codes.num_levels} levels, "
                             f"codec expects {len(self.levels)}")
        z_hat = dequantize(codes, self.levels)
        rng = None
        if noise_seed is not None and self.config.noise_enabled:
            rng = np.random.default_rng(noise_seed)
        samples = self.decoder.forward(z_hat, rng)
        return AudioBuffer(self.config.sample_rate, np.ascontiguousarray(samples[:, 0]))

    # -- introspection ----------------------------------------------------

    def named_params(self):
        yield from self.encoder.named_params("encoder")
        for i, (_, cb) in enumerate(self.levels):
            yield f"quantizer.level{i}.entries", cb.entries
            yield f"quantizer.level{i}.in_proj", cb.in_proj
            yield f"quantizer.level{i}.out_proj", cb.out_proj
        yield from self.decoder.named_params("decoder")

    def param_dict(self) -> dict[str, np.ndarray]:
        out = {}
        for name, arr in self.named_params():
            if name in out:
                raise RuntimeError(f"duplicate parameter name {name}")
            out[name] = arr
        return out

    def conv_report(self) -> list[ConvInfo]:
        out = []
        for name, role, spec, transposed in list(self.encoder.conv_entries("encoder")) + \
                list(self.decoder.conv_entries("decoder")):
            out.append(ConvInfo(
                name=name, role=role,
                in_channels=spec.in_channels, out_channels=spec.out_channels,
                kernel_size=spec.kernel_size, stride=spec.stride, groups=spec.groups,
                depthwise=spec.is_depthwise, transposed=transposed,
            ))
        return out


class _ZeroInit:
    """Stand-in generator used when parameters will be overwritten by a loader."""

    def normal(self, loc, scale, size):
        return np.zeros(size, dtype=np.float64)


def build(config: CodecConfig, seed: int | None = 0) -> Codec:
    """Construct a codec with seeded random parameters (``seed=None``: zeros)."""
    return Codec(config, seed)


def count_parameters(codec: Codec) -> int:
    """Exact number of scalar weights, codebooks and projections included."""
    return sum(arr.size for _, arr in codec.named_params())
