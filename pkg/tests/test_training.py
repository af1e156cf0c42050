import numpy as np
import pytest

from msac.rvq import LevelConfig, quantize
from msac.training import (InsufficientDataError, TrainOptions, read_features,
                           residual_mse_trajectory, train_codebooks_ema,
                           write_features)

from oracles import lloyd_mse


def four_clusters(rng, n=400, channels=6, spread=0.05):
    centers = rng.normal(0, 1, (4, channels)) * 3.0
    labels = rng.integers(0, 4, n)
    data = centers[labels] + rng.normal(0, spread, (n, channels))
    return data.astype(np.float32)


def test_single_level_matches_lloyd_quality(rng):
    data = four_clusters(rng)
    levels = [LevelConfig(1, 4, data.shape[1])]
    opts = TrainOptions(iterations=60, rng_seed=0)
    (book,) = train_codebooks_ema(data, levels, opts)
    result = quantize(data, [(levels[0], book)])
    ours = float(np.mean(np.sum(result.residual.astype(np.float64) ** 2, axis=1)))
    oracle = lloyd_mse(data, 4, 60, seed=0)
    assert ours <= 1.5 * oracle


def test_training_is_deterministic(rng):
    data = four_clusters(rng)
    levels = [LevelConfig(2, 8, 3), LevelConfig(1, 8, 3)]
    opts = TrainOptions(iterations=20, rng_seed=42)
    a = train_codebooks_ema(data, levels, opts)
    b = train_codebooks_ema(data, levels, opts)
    for ca, cb in zip(a, b):
        np.testing.assert_array_equal(ca.entries, cb.entries)
        np.testing.assert_array_equal(ca.in_proj, cb.in_proj)
        np.testing.assert_array_equal(ca.out_proj, cb.out_proj)


def test_identity_projections_when_dims_match(rng):
    data = four_clusters(rng, channels=5)
    levels = [LevelConfig(1, 4, 5)]
    (book,) = train_codebooks_ema(data, levels, TrainOptions(iterations=5))
    np.testing.assert_array_equal(book.in_proj, np.eye(5, dtype=np.float32))
    np.testing.assert_array_equal(book.out_proj, np.eye(5, dtype=np.float32))


def test_projection_dim_reduction(rng):
    data = four_clusters(rng, channels=8)
    levels = [LevelConfig(1, 4, 3)]
    (book,) = train_codebooks_ema(data, levels, TrainOptions(iterations=20))
    assert book.in_proj.shape == (3, 8)
    assert book.out_proj.shape == (8, 3)
    # projecting out and back should keep most cluster energy
    recon = data @ book.in_proj.T @ book.out_proj.T
    rel = np.linalg.norm(data - recon) / np.linalg.norm(data)
    assert rel < 0.6


def test_residual_mse_trajectory_is_non_increasing(rng):
    data = four_clusters(rng, n=512, channels=4)
    strides = [8, 4, 2, 1]
    levels = [LevelConfig(w, 16, 4) for w in strides]
    books = train_codebooks_ema(data, levels, TrainOptions(iterations=30))
    trajectory = residual_mse_trajectory(data, list(zip(levels, books)))
    assert len(trajectory) == len(strides) + 1
    for before, after in zip(trajectory, trajectory[1:]):
        assert after <= before * 1.01


def test_empty_features_rejected():
    with pytest.raises(InsufficientDataError):
        train_codebooks_ema(np.zeros((0, 4), np.float32), [LevelConfig(1, 4, 4)])


def test_too_few_frames_for_coarsest_level_rejected():
    data = np.zeros((3, 4), np.float32)
    with pytest.raises(InsufficientDataError):
        train_codebooks_ema(data, [LevelConfig(8, 4, 4)])


def test_warns_when_codebook_exceeds_distinct_frames(rng):
    data = four_clusters(rng, n=16, channels=4)
    with pytest.warns(UserWarning, match="frames"):
        train_codebooks_ema(data, [LevelConfig(1, 64, 4)],
                            TrainOptions(iterations=3))


def test_requested_dim_larger_than_channels_rejected(rng):
    data = four_clusters(rng, channels=3)
    with pytest.raises(ValueError):
        train_codebooks_ema(data, [LevelConfig(1, 4, 7)],
                            TrainOptions(iterations=2))


def test_features_file_roundtrip(tmp_path, rng):
    feats = rng.normal(0, 1, (33, 5)).astype(np.float32)
    path = tmp_path / "f.bin"
    write_features(path, feats)
    np.testing.assert_array_equal(read_features(path), feats)


def test_features_file_truncation_detected(tmp_path, rng):
    feats = rng.normal(0, 1, (10, 4)).astype(np.float32)
    path = tmp_path / "f.bin"
    write_features(path, feats)
    raw = path.read_bytes()
    path.write_bytes(raw[:-7])
    with pytest.raises(ValueError):
        read_features(path)
