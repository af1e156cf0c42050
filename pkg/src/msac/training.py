"""Desk-scale codebook learning by per-level EMA k-means.

Levels are fit greedily, coarsest first: each level clusters the pooled
residual left by the levels before it, then its reconstruction is
subtracted before fitting the next. Exponential-moving-average updates of
cluster counts and sums keep the fit stable on streamed batches; codewords
that fall out of use are re-seeded from random input frames. Everything is
driven by one seeded generator, so a seed fixes the result bit-for-bit.
"""

import struct
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ops import as_frames, avg_pool, linear, nn_upsample
from .rvq import Codebook, LevelConfig, _nearest_tokens


class InsufficientDataError(ValueError):
    """Raised when the feature stream is too short to fit any codebook."""


@dataclass(frozen=True)
class TrainOptions:
    iterations: int = 100
    ema_decay: float = 0.99
    dead_code_threshold: float = 2.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0.0 < self.ema_decay < 1.0:
            raise ValueError("ema_decay must be in (0, 1)")
        if self.dead_code_threshold < 0:
            raise ValueError("dead_code_threshold must be >= 0")


def _kmeans_pp_init(data: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding; duplicates data points when k exceeds the frame count."""
    n = data.shape[0]
    centers = np.empty((k, data.shape[1]), dtype=np.float32)
    first = int(rng.integers(n))
    centers[0] = data[first]
    if k == 1:
        return centers
    d2 = ((data - centers[0]) ** 2).sum(axis=1).astype(np.float64)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[j] = data[idx]
        d2 = np.minimum(d2, ((data - centers[j]) ** 2).sum(axis=1))
    return centers


def _projections(pooled: np.ndarray, dim: int, channels: int):
    """Identity projections when C == D, otherwise a principal subspace."""
    if dim == channels:
        eye = np.eye(channels, dtype=np.float32)
        return eye, eye.copy()
    if dim > channels:
        raise ValueError(f"codeword_dim {dim} exceeds feature channels {channels}")
    # top-D right singular vectors of the pooled residuals (uncentered);
    # signs fixed so the largest-magnitude component is positive
    _, _, vt = np.linalg.svd(pooled.astype(np.float64), full_matrices=False)
    basis = vt[:dim]
    if basis.shape[0] < dim:
        basis = np.vstack([basis, np.zeros((dim - basis.shape[0], channels))])
    for row in basis:
        if row[np.abs(row).argmax()] < 0:
            row *= -1.0
    in_proj = basis.astype(np.float32)
    return in_proj, np.ascontiguousarray(in_proj.T)


def train_codebooks_ema(features, levels: Sequence[LevelConfig],
                        opts: TrainOptions = TrainOptions()) -> list[Codebook]:
    """Fit one codebook per level over a (frames, channels) feature stream.

    The stream is trimmed to a multiple of the least common multiple of the
    level strides so pooling stays exact. Returns codebooks in level order.
    """
    features = as_frames(features)
    channels = features.shape[1]
    if not levels:
        raise ValueError("at least one level is required")

    lcm = int(np.lcm.reduce([cfg.stride for cfg in levels]))
    usable = (features.shape[0] // lcm) * lcm
    if usable == 0:
        raise InsufficientDataError(
            f"need at least {lcm} frames (stride lcm), got {features.shape[0]}")
    features = features[:usable]

    rng = np.random.default_rng(opts.rng_seed)
    residual = features.copy()
    codebooks: list[Codebook] = []
    for li, cfg in enumerate(levels):
        pooled = avg_pool(residual, cfg.stride)
        in_proj, out_proj = _projections(pooled, cfg.codeword_dim, channels)
        data = linear(pooled, in_proj)

        distinct = np.unique(data, axis=0).shape[0]
        if distinct < cfg.codebook_size:
            warnings.warn(
                f"level {li}: codebook size {cfg.codebook_size} exceeds the "
                f"{distinct} distinct pooled frames; duplicate codewords will remain",
                stacklevel=2,
            )

        entries = _kmeans_pp_init(data, cfg.codebook_size, rng)
        ema_counts = np.ones(cfg.codebook_size, dtype=np.float64)
        ema_sums = entries.astype(np.float64).copy()
        decay = opts.ema_decay
        for _ in range(opts.iterations):
            assign = _nearest_tokens(data, entries, normalize=False)
            counts = np.bincount(assign, minlength=cfg.codebook_size).astype(np.float64)
            sums = np.zeros((cfg.codebook_size, cfg.codeword_dim), dtype=np.float64)
            np.add.at(sums, assign, data.astype(np.float64))

            ema_counts = decay * ema_counts + (1.0 - decay) * counts
            ema_sums = decay * ema_sums + (1.0 - decay) * sums
            entries = (ema_sums / np.maximum(ema_counts, 1e-12)[:, None]).astype(np.float32)

            dead = np.flatnonzero(counts < opts.dead_code_threshold)
            if dead.size and dead.size < cfg.codebook_size:
                picks = rng.integers(data.shape[0], size=dead.size)
                entries[dead] = data[picks]
                ema_counts[dead] = 1.0
                ema_sums[dead] = data[picks].astype(np.float64)

        cb = Codebook(entries, in_proj, out_proj)
        codebooks.append(cb)

        assign = _nearest_tokens(data, entries, normalize=False)
        recon = linear(entries[assign], out_proj)
        residual -= nn_upsample(recon, cfg.stride)
    return codebooks


def residual_mse_trajectory(features, levels: Sequence[tuple[LevelConfig, Codebook]]) -> list[float]:
    """Mean squared residual frame norm before and after each level."""
    from .rvq import quantize

    features = as_frames(features)
    lcm = int(np.lcm.reduce([cfg.stride for cfg, _ in levels]))
    usable = (features.shape[0] // lcm) * lcm
    features = features[:usable]

    traj = [float((features.astype(np.float64) ** 2).sum(axis=1).mean())]
    residual = features.copy()
    for cfg, cb in levels:
        r = quantize(residual, [(cfg, cb)])
        residual = r.residual
        traj.append(float((residual.astype(np.float64) ** 2).sum(axis=1).mean()))
    return traj


FEATURES_HEADER = struct.Struct("<II")


def write_features(path, features) -> None:
    """Raw feature file: u32 frames, u32 channels, float32 LE data."""
    features = as_frames(features)
    with open(path, "wb") as fh:
        fh.write(FEATURES_HEADER.pack(features.shape[0], features.shape[1]))
        fh.write(features.astype("<f4").tobytes())


def read_features(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(FEATURES_HEADER.size)
        if len(head) != FEATURES_HEADER.size:
            raise ValueError(f"feature file {path} too short for its header")
        frames, channels = FEATURES_HEADER.unpack(head)
        data = fh.read()
    expected = frames * channels * 4
    if len(data) != expected:
        raise ValueError(
            f"feature file {path}: expected {expected} payload bytes, got {len(data)}")
    return np.frombuffer(data, dtype="<f4").reshape(frames, channels).astype(np.float32)
