"""Deterministic 1-D signal kernels on frame-major float32 arrays.

A frame tensor is a (frames, channels) float32 ndarray. All operations here
are pure functions: no hidden state, no RNG, bit-identical outputs on
repeated calls, safe to run concurrently. Convolution sums accumulate in
double precision; test comparisons assume absolute tolerance 1e-6.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .kernels import _pykernels


def as_frames(x, channels: int | None = None) -> np.ndarray:
    """Validate/coerce ``x`` to a C-contiguous (T, C) float32 array."""
    a = np.ascontiguousarray(x, dtype=np.float32)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"frame tensor must be 2-D (frames, channels), got shape {a.shape}")
    if channels is not None and a.shape[1] != channels:
        raise ValueError(f"expected {channels} channels, got {a.shape[1]}")
    return a


@dataclass
class ConvSpec:
    """Shape, padding and parameters of one convolution.

    ``weight`` is (out_channels, in_channels // groups, kernel_size);
    the same spec drives both the direct and the transposed kernel.
    """

    in_channels: int
    out_channels: int
    kernel_size: int
    weight: np.ndarray
    bias: np.ndarray | None = None
    stride: int = 1
    dilation: int = 1
    groups: int = 1
    pad_l: int = 0
    pad_r: int = 0

    def __post_init__(self):
        if self.stride < 1 or self.dilation < 1 or self.groups < 1:
            raise ValueError("stride, dilation and groups must be >= 1")
        if self.pad_l < 0 or self.pad_r < 0:
            raise ValueError("padding must be non-negative")
        if self.in_channels % self.groups or self.out_channels % self.groups:
            raise ValueError("in_channels and out_channels must be divisible by groups")
        expected = (self.out_channels, self.in_channels // self.groups, self.kernel_size)
        self.weight = np.ascontiguousarray(self.weight, dtype=np.float32)
        if self.weight.shape != expected:
            raise ValueError(f"weight shape {self.weight.shape} != expected {expected}")
        if self.bias is not None:
            self.bias = np.ascontiguousarray(self.bias, dtype=np.float32)
            if self.bias.shape != (self.out_channels,):
                raise ValueError(f"bias shape {self.bias.shape} != ({self.out_channels},)")
        if not np.all(np.isfinite(self.weight)):
            raise ValueError("weight contains non-finite values")

    @property
    def is_depthwise(self) -> bool:
        return self.groups == self.in_channels == self.out_channels

    @property
    def param_count(self) -> int:
        return self.weight.size + (self.bias.size if self.bias is not None else 0)


def conv1d(x, spec: ConvSpec) -> np.ndarray:
    """Standard cross-correlation of ``x`` (T, Cin) -> (T', Cout)."""
    x = as_frames(x, spec.in_channels)
    span = spec.dilation * (spec.kernel_size - 1) + 1
    t_pad = x.shape[0] + spec.pad_l + spec.pad_r
    if t_pad < span:
        raise ValueError(f"padded length {t_pad} shorter than kernel extent {span}")
    t_out = (t_pad - span) // spec.stride + 1
    if t_out < 1:
        raise ValueError("convolution produces no output frames")
    if spec.kernel_size == 1 and spec.groups == 1:
        return _pointwise(x, spec)
    # ungrouped convs are matmul-shaped, so BLAS beats the compiled loops;
    # the selected backend handles the grouped/depthwise kernels it is for
    backend = _pykernels if spec.groups == 1 else kernels
    return backend.conv1d(
        x, spec.weight, spec.bias,
        spec.stride, spec.dilation, spec.groups, spec.pad_l, spec.pad_r,
    )


def _pointwise(x, spec: ConvSpec) -> np.ndarray:
    # 1x1 ungrouped conv is a per-frame linear map; BLAS beats both backends
    if spec.pad_l or spec.pad_r:
        xp = np.zeros((x.shape[0] + spec.pad_l + spec.pad_r, x.shape[1]), dtype=np.float32)
        xp[spec.pad_l:spec.pad_l + x.shape[0]] = x
        x = xp
    if spec.stride > 1:
        x = x[::spec.stride]
    out = x @ spec.weight[:, :, 0].T
    if spec.bias is not None:
        out = out + spec.bias
    return np.ascontiguousarray(out)


def transposed_conv1d(x, spec: ConvSpec) -> np.ndarray:
    """Gradient-of-conv upsampling of ``x`` (T, Cin) -> (T', Cout)."""
    x = as_frames(x, spec.in_channels)
    t_out = ((x.shape[0] - 1) * spec.stride - spec.pad_l - spec.pad_r
             + spec.dilation * (spec.kernel_size - 1) + 1)
    if t_out < 1:
        raise ValueError("transposed convolution produces no output frames")
    backend = _pykernels if spec.groups == 1 else kernels
    return backend.conv1d_transposed(
        x, spec.weight, spec.bias,
        spec.stride, spec.dilation, spec.groups, spec.pad_l, spec.pad_r,
    )


def avg_pool(x, w: int) -> np.ndarray:
    """Mean over non-overlapping blocks of ``w`` frames, per channel.

    Requires the frame count to be divisible by ``w``; callers pad
    upstream so this kernel stays total.
    """
    x = as_frames(x)
    if w < 1:
        raise ValueError("pool factor must be >= 1")
    if w == 1:
        return x
    t = x.shape[0]
    if t % w:
        raise ValueError(f"frame count {t} not divisible by pool factor {w}")
    # float64 accumulation: a block of w equal values must pool back to the
    # exact value, which float32 partial sums do not guarantee
    blocks = x.reshape(t // w, w, x.shape[1]).mean(axis=1, dtype=np.float64)
    return blocks.astype(np.float32)


def nn_upsample(x, w: int) -> np.ndarray:
    """Nearest-neighbor upsampling: each frame repeated ``w`` times."""
    x = as_frames(x)
    if w < 1:
        raise ValueError("upsample factor must be >= 1")
    if w == 1:
        return x
    return np.repeat(x, w, axis=0)


def snake(x, alpha) -> np.ndarray:
    """Periodic activation x + sin^2(alpha * x) / alpha, per channel."""
    x = as_frames(x)
    alpha = np.asarray(alpha, dtype=np.float32)
    if alpha.ndim == 0:
        alpha = np.full(x.shape[1], float(alpha), dtype=np.float32)
    if alpha.shape != (x.shape[1],):
        raise ValueError(f"alpha shape {alpha.shape} != ({x.shape[1]},)")
    if np.any(alpha <= 0):
        raise ValueError("snake alpha must be positive")
    s = np.sin(x * alpha)
    return x + s * s / alpha


def leaky_relu(x, slope: float = 0.01) -> np.ndarray:
    x = as_frames(x)
    return np.where(x >= 0, x, np.float32(slope) * x)


def linear(x, weight, bias=None) -> np.ndarray:
    """Per-frame linear map: x (T, Cin) @ weight (Cout, Cin)^T + bias."""
    x = as_frames(x)
    w = np.asarray(weight, dtype=np.float32)
    if w.ndim != 2 or w.shape[1] != x.shape[1]:
        raise ValueError(f"weight shape {w.shape} incompatible with {x.shape[1]} channels")
    out = x @ w.T
    if bias is not None:
        out = out + np.asarray(bias, dtype=np.float32)
    return out


def local_attention_weights(x, wq, wk, window: int) -> np.ndarray:
    """Row-stochastic (T, T) attention matrix of the windowed layer.

    Frame t attends to frames s with |s - t| < window; window >= T is
    full attention.
    """
    x = as_frames(x)
    if window < 1:
        raise ValueError("attention window must be >= 1")
    q = linear(x, wq)
    k = linear(x, wk)
    scale = np.float32(1.0 / np.sqrt(q.shape[1]))
    scores = (q @ k.T) * scale
    t = x.shape[0]
    offs = np.arange(t)
    banned = np.abs(offs[:, None] - offs[None, :]) >= window
    scores = np.where(banned, np.float32(-np.inf), scores)
    scores = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(scores)
    return e / e.sum(axis=1, keepdims=True)


def local_windowed_attention(x, wq, wk, wv, window: int) -> np.ndarray:
    """Single-head scaled dot-product attention over a symmetric window.

    Non-causal: frame t attends to all frames s with |s - t| < window.
    Output channels follow the value projection.
    """
    x = as_frames(x)
    weights = local_attention_weights(x, wq, wk, window)
    v = linear(x, wv)
    return weights @ v
