"""Multi-scale residual vector quantization.

A cascade of codebook levels, each operating at its own temporal stride:
a level average-pools the running residual by its stride, projects to
codeword space, picks the nearest codeword, and the upsampled
reconstruction is subtracted before the next level. With all strides equal
to 1 this reduces to plain residual VQ.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .ops import as_frames, avg_pool, linear, nn_upsample


@dataclass(frozen=True)
class LevelConfig:
    """Geometry of one quantizer level."""

    stride: int
    codebook_size: int
    codeword_dim: int

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.codebook_size < 1 or self.codeword_dim < 1:
            raise ValueError("codebook_size and codeword_dim must be >= 1")


@dataclass
class Codebook:
    """K x D codeword table with channel<->codeword projections."""

    entries: np.ndarray   # (K, D)
    in_proj: np.ndarray   # (D, C)
    out_proj: np.ndarray  # (C, D)

    def __post_init__(self):
        self.entries = np.ascontiguousarray(self.entries, dtype=np.float32)
        self.in_proj = np.ascontiguousarray(self.in_proj, dtype=np.float32)
        self.out_proj = np.ascontiguousarray(self.out_proj, dtype=np.float32)
        if self.entries.ndim != 2 or self.entries.shape[0] < 1:
            raise ValueError("entries must be a non-empty (K, D) matrix")
        d = self.entries.shape[1]
        if self.in_proj.shape[0] != d or self.out_proj.shape[1] != d:
            raise ValueError("projection shapes inconsistent with codeword dimension")
        if self.in_proj.shape[1] != self.out_proj.shape[0]:
            raise ValueError("in_proj and out_proj disagree on channel count")
        if not np.all(np.isfinite(self.entries)):
            raise ValueError("codebook entries must be finite")

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def dim(self) -> int:
        return self.entries.shape[1]

    @property
    def channels(self) -> int:
        return self.in_proj.shape[1]

    @classmethod
    def identity(cls, entries) -> "Codebook":
        """Codebook whose projections are the identity (C == D)."""
        entries = np.asarray(entries, dtype=np.float32)
        eye = np.eye(entries.shape[1], dtype=np.float32)
        return cls(entries, eye, eye.copy())


@dataclass
class MultiScaleCodes:
    """Per-level integer token sequences, coarsest level first."""

    levels: list[np.ndarray]

    def __post_init__(self):
        cleaned = []
        for i, lv in enumerate(self.levels):
            a = np.asarray(lv)
            if a.ndim != 1:
                raise ValueError(f"level {i} tokens must be 1-D")
            if a.size and not np.issubdtype(a.dtype, np.integer):
                raise ValueError(f"level {i} tokens must be integers")
            cleaned.append(np.ascontiguousarray(a, dtype=np.int32))
        self.levels = cleaned

    @property
    def level_lengths(self) -> list[int]:
        return [len(lv) for lv in self.levels]

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiScaleCodes):
            return NotImplemented
        return self.level_lengths == other.level_lengths and all(
            np.array_equal(a, b) for a, b in zip(self.levels, other.levels)
        )


class QuantizeResult(NamedTuple):
    codes: MultiScaleCodes
    quantized: np.ndarray
    residual: np.ndarray


def _nearest_tokens(vectors: np.ndarray, entries: np.ndarray, normalize: bool) -> np.ndarray:
    """Argmin of squared Euclidean distance per row; ties take the lowest index."""
    v = vectors
    e = entries
    if normalize:
        v = v / np.maximum(np.linalg.norm(v, axis=1, keepdims=True), 1e-12)
        e = e / np.maximum(np.linalg.norm(e, axis=1, keepdims=True), 1e-12)
    d2 = (
        (v * v).sum(axis=1, keepdims=True)
        - 2.0 * (v @ e.T)
        + (e * e).sum(axis=1)[None, :]
    )
    return d2.argmin(axis=1).astype(np.int32)


def lookup_nearest(v, codebook: Codebook, normalize: bool = False) -> int:
    """Index of the codeword nearest to ``v`` in squared Euclidean distance."""
    v = np.asarray(v, dtype=np.float32).reshape(1, -1)
    if v.shape[1] != codebook.dim:
        raise ValueError(f"vector dimension {v.shape[1]} != codeword dimension {codebook.dim}")
    return int(_nearest_tokens(v, codebook.entries, normalize)[0])


def _check_levels(levels: Sequence[tuple[LevelConfig, Codebook]], channels: int | None):
    if not levels:
        raise ValueError("at least one quantizer level is required")
    for i, (cfg, cb) in enumerate(levels):
        if cb.size != cfg.codebook_size or cb.dim != cfg.codeword_dim:
            raise ValueError(f"level {i}: codebook shape {cb.size}x{cb.dim} does not match "
                             f"config {cfg.codebook_size}x{cfg.codeword_dim}")
        if channels is not None and cb.channels != channels:
            raise ValueError(f"level {i}: codebook expects {cb.channels} channels, got {channels}")


def quantize(z, levels: Sequence[tuple[LevelConfig, Codebook]],
             normalize_lookup: bool = False) -> QuantizeResult:
    """Run the multi-scale cascade over latent ``z`` (T, C).

    Per level: pool the residual by the level stride, project to codeword
    space, look up the nearest codeword, project back, upsample, subtract.
    Returns the tokens, the summed reconstruction and the final residual;
    z == quantized + residual up to float32 summation.
    """
    z = as_frames(z)
    _check_levels(levels, z.shape[1])
    t = z.shape[0]
    for i, (cfg, _) in enumerate(levels):
        if t % cfg.stride:
            raise ValueError(f"frame count {t} not divisible by level {i} stride {cfg.stride}")

    residual = z.copy()
    z_hat = np.zeros_like(z)
    tokens: list[np.ndarray] = []
    for cfg, cb in levels:
        pooled = avg_pool(residual, cfg.stride)
        projected = linear(pooled, cb.in_proj)
        toks = _nearest_tokens(projected, cb.entries, normalize_lookup)
        coarse = linear(cb.entries[toks], cb.out_proj)
        q = nn_upsample(coarse, cfg.stride)
        residual -= q
        z_hat += q
        tokens.append(toks)
    return QuantizeResult(MultiScaleCodes(tokens), z_hat, residual)


def dequantize(codes: MultiScaleCodes, levels: Sequence[tuple[LevelConfig, Codebook]]) -> np.ndarray:
    """Sum of per-level upsampled codeword reconstructions."""
    _check_levels(levels, None)
    if codes.num_levels != len(levels):
        raise ValueError(f"codes have {codes.num_levels} levels, expected {len(levels)}")
    t = len(codes.levels[0]) * levels[0][0].stride
    out = None
    for i, ((cfg, cb), toks) in enumerate(zip(levels, codes.levels)):
        if len(toks) * cfg.stride != t:
            raise ValueError(f"level {i} length {len(toks)} inconsistent with "
                             f"common frame count {t} (stride {cfg.stride})")
        if toks.size and (toks.min() < 0 or toks.max() >= cb.size):
            raise ValueError(f"level {i} token out of range [0, {cb.size})")
        coarse = linear(cb.entries[toks], cb.out_proj)
        q = nn_upsample(coarse, cfg.stride)
        out = q if out is None else out + q
    return out


@dataclass
class LevelUsage:
    counts: np.ndarray
    entropy: float


def codebook_usage(codes: MultiScaleCodes,
                   levels: Sequence[tuple[LevelConfig, Codebook]]) -> list[LevelUsage]:
    """Token histogram and normalized entropy (base-K) per level.

    Entropy is in [0, 1]; a single-entry codebook is defined as 0.
    """
    _check_levels(levels, None)
    out = []
    for (cfg, cb), toks in zip(levels, codes.levels):
        counts = np.bincount(toks, minlength=cb.size)
        if cb.size > 1 and toks.size:
            p = counts[counts > 0] / toks.size
            entropy = float(-(p * np.log(p)).sum() / math.log(cb.size))
            entropy = min(1.0, max(0.0, entropy))
        else:
            entropy = 0.0
        out.append(LevelUsage(counts=counts, entropy=entropy))
    return out
