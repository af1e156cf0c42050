import numpy as np
import pytest

from msac.config import CodecConfig


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def tiny_config():
    """Small codec for fast model-level tests; 16x total downsampling."""
    return CodecConfig(
        sample_rate=16000,
        encoder_rates=(2, 2, 4),
        decoder_rates=(4, 2, 2),
        vq_strides=(2, 1),
        codebook_size=32,
        codeword_dim=4,
        base_channels=4,
        attention_window=8,
    )
