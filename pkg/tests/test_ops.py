import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msac.ops import (ConvSpec, as_frames, avg_pool, conv1d, leaky_relu, linear,
                      local_attention_weights, local_windowed_attention,
                      nn_upsample, snake, transposed_conv1d)

from oracles import full_attention


def spec_for(rng, c_in, c_out, kernel, **kw):
    groups = kw.get("groups", 1)
    w = rng.normal(0, 1, (c_out, c_in // groups, kernel)).astype(np.float32)
    b = rng.normal(0, 1, c_out).astype(np.float32)
    return ConvSpec(in_channels=c_in, out_channels=c_out, kernel_size=kernel,
                    weight=w, bias=b, **kw)


# --- ConvSpec validation -------------------------------------------------

def test_spec_rejects_wrong_weight_shape(rng):
    w = rng.normal(0, 1, (4, 3, 5)).astype(np.float32)
    with pytest.raises(ValueError):
        ConvSpec(in_channels=4, out_channels=4, kernel_size=5, weight=w)


def test_spec_rejects_indivisible_groups(rng):
    with pytest.raises(ValueError):
        spec_for(rng, 3, 4, 3, groups=2)


def test_spec_rejects_nonfinite_weight():
    w = np.full((1, 1, 1), np.nan, dtype=np.float32)
    with pytest.raises(ValueError):
        ConvSpec(in_channels=1, out_channels=1, kernel_size=1, weight=w)


def test_depthwise_flag_and_param_count(rng):
    spec = spec_for(rng, 4, 4, 7, groups=4)
    assert spec.is_depthwise
    assert spec.param_count == 4 * 1 * 7 + 4
    # the documented tiny example: 1 in, 2 out, kernel 3, bias
    small = spec_for(rng, 1, 2, 3)
    assert small.param_count == 8


def test_conv_channel_mismatch_rejected(rng):
    spec = spec_for(rng, 4, 4, 3)
    with pytest.raises(ValueError, match="channel"):
        conv1d(rng.normal(0, 1, (10, 3)).astype(np.float32), spec)


def test_conv_input_shorter_than_kernel_rejected(rng):
    spec = spec_for(rng, 2, 2, 5)
    with pytest.raises(ValueError):
        conv1d(rng.normal(0, 1, (2, 2)).astype(np.float32), spec)


def test_pointwise_fast_path_matches_matmul(rng):
    spec = spec_for(rng, 6, 3, 1)
    x = rng.normal(0, 1, (40, 6)).astype(np.float32)
    got = conv1d(x, spec)
    want = x.astype(np.float64) @ spec.weight[:, :, 0].astype(np.float64).T \
        + spec.bias
    np.testing.assert_allclose(got, want.astype(np.float32), atol=1e-6, rtol=0)


def test_transposed_output_length_formula(rng):
    spec = spec_for(rng, 2, 2, 8, stride=4, pad_l=2, pad_r=2)
    out = transposed_conv1d(rng.normal(0, 1, (10, 2)).astype(np.float32), spec)
    assert out.shape == (40, 2)


# --- pooling algebra ------------------------------------------------------

def test_avg_pool_divisibility_error(rng):
    with pytest.raises(ValueError, match="divisible"):
        avg_pool(rng.normal(0, 1, (10, 2)).astype(np.float32), 4)


def test_upsample_repeats_frames():
    x = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32)
    up = nn_upsample(x, 3)
    assert up.shape == (6, 2)
    np.testing.assert_array_equal(up[:3], np.tile(x[0], (3, 1)))


@settings(max_examples=60, deadline=None)
@given(t_blocks=st.integers(1, 8), channels=st.integers(1, 5),
       w=st.sampled_from([1, 2, 4, 8]), seed=st.integers(0, 2**31 - 1))
def test_pool_after_upsample_is_identity(t_blocks, channels, w, seed):
    x = np.random.default_rng(seed).normal(0, 1, (t_blocks * w, channels))
    x = x.astype(np.float32)
    np.testing.assert_array_equal(avg_pool(nn_upsample(x, w), w), x)


@settings(max_examples=60, deadline=None)
@given(t_blocks=st.integers(1, 8), channels=st.integers(1, 5),
       w=st.sampled_from([1, 2, 4, 8]), seed=st.integers(0, 2**31 - 1))
def test_upsample_of_pool_is_idempotent(t_blocks, channels, w, seed):
    x = np.random.default_rng(seed).normal(0, 1, (t_blocks * w, channels))
    once = nn_upsample(avg_pool(x.astype(np.float32), w), w)
    twice = nn_upsample(avg_pool(once, w), w)
    np.testing.assert_array_equal(once, twice)


# --- activations ----------------------------------------------------------

def test_snake_zero_fixed_point():
    alpha = np.array([1.0, 2.0], dtype=np.float32)
    x = np.zeros((5, 2), dtype=np.float32)
    np.testing.assert_array_equal(snake(x, alpha), x)


def test_snake_uses_per_channel_alpha(rng):
    x = rng.normal(0, 1, (30, 2)).astype(np.float32)
    alpha = np.array([0.5, 3.0], dtype=np.float32)
    out = snake(x, alpha)
    for c in range(2):
        want = x[:, c] + np.sin(alpha[c] * x[:, c]) ** 2 / alpha[c]
        np.testing.assert_allclose(out[:, c], want, atol=1e-6)


def test_leaky_relu_slope():
    x = np.array([[-2.0, 4.0]], dtype=np.float32)
    np.testing.assert_allclose(leaky_relu(x, 0.01), [[-0.02, 4.0]], atol=1e-8)


def test_linear_bias_broadcast(rng):
    x = rng.normal(0, 1, (7, 3)).astype(np.float32)
    w = rng.normal(0, 1, (2, 3)).astype(np.float32)
    b = rng.normal(0, 1, 2).astype(np.float32)
    np.testing.assert_allclose(linear(x, w, b), x @ w.T + b, atol=1e-6)


def test_as_frames_promotes_vectors():
    x = as_frames(np.arange(4, dtype=np.float32))
    assert x.shape == (4, 1) and x.dtype == np.float32


# --- attention ------------------------------------------------------------

def attn_mats(rng, c):
    return [rng.normal(0, c ** -0.5, (c, c)).astype(np.float32) for _ in range(3)]


def test_attention_weights_are_row_stochastic_and_banded(rng):
    c, t, window = 4, 12, 3
    wq, wk, _ = attn_mats(rng, c)
    x = rng.normal(0, 1, (t, c)).astype(np.float32)
    weights = local_attention_weights(x, wq, wk, window)
    np.testing.assert_allclose(weights.sum(axis=1), np.ones(t), atol=1e-6)
    for i in range(t):
        for j in range(t):
            if abs(i - j) >= window:
                assert weights[i, j] == 0.0


def test_window_one_attends_only_to_self(rng):
    c = 3
    wq, wk, wv = attn_mats(rng, c)
    x = rng.normal(0, 1, (9, c)).astype(np.float32)
    out = local_windowed_attention(x, wq, wk, wv, window=1)
    np.testing.assert_allclose(out, x @ wv.T, atol=1e-6)


def test_single_frame_reduces_to_value_projection(rng):
    c = 5
    wq, wk, wv = attn_mats(rng, c)
    x = rng.normal(0, 1, (1, c)).astype(np.float32)
    out = local_windowed_attention(x, wq, wk, wv, window=4)
    np.testing.assert_allclose(out, x @ wv.T, atol=1e-6)


def test_wide_window_equals_full_attention(rng):
    c, t = 4, 10
    wq, wk, wv = attn_mats(rng, c)
    x = rng.normal(0, 1, (t, c)).astype(np.float32)
    got = local_windowed_attention(x, wq, wk, wv, window=t + 5)
    np.testing.assert_allclose(got, full_attention(x, wq, wk, wv),
                               atol=1e-6, rtol=0)


def test_attention_rejects_bad_window(rng):
    wq, wk, wv = attn_mats(rng, 2)
    x = rng.normal(0, 1, (4, 2)).astype(np.float32)
    with pytest.raises(ValueError):
        local_windowed_attention(x, wq, wk, wv, window=0)
