import json

import pytest

from msac.config import PRESETS, CodecConfig, load_config, preset, preset_name_of


def test_preset_registry_names():
    assert set(PRESETS) == {"general-44k", "general-32k", "speech-24k",
                            "ablation-single-scale"}


def test_general_44k_shape_numbers():
    cfg = preset("general-44k")
    assert cfg.sample_rate == 44100
    assert cfg.encoder_rates == (2, 3, 8, 8)
    assert cfg.decoder_rates == (8, 8, 3, 2)
    assert cfg.vq_strides == (8, 4, 2, 1)
    assert cfg.hop == 384
    assert cfg.stride_lcm == 8
    assert cfg.codebook_size == 4096
    assert cfg.bits_per_token == 12
    assert cfg.attention_enabled


def test_speech_preset_has_no_attention_and_larger_hop():
    cfg = preset("speech-24k")
    assert cfg.sample_rate == 24000
    assert cfg.hop == 512
    assert cfg.vq_strides == (4, 2, 1)
    assert not cfg.attention_enabled


def test_single_scale_ablation_uses_unit_strides():
    cfg = preset("ablation-single-scale")
    assert cfg.vq_strides == (1, 1, 1)
    assert cfg.hop == 512
    assert cfg.sample_rate == 44100


def test_token_rates_round_to_documented_values():
    assert [round(r) for r in preset("general-44k").token_rates()] == [14, 29, 57, 115]
    assert [round(r) for r in preset("general-32k").token_rates()] == [10, 21, 42, 83]
    assert [round(r) for r in preset("speech-24k").token_rates()] == [12, 23, 47]


def test_latent_channels_growth():
    cfg = preset("general-44k")
    assert cfg.latent_channels == cfg.base_channels * 2 ** len(cfg.encoder_rates)


def test_rate_products_must_match():
    with pytest.raises(ValueError):
        CodecConfig(sample_rate=16000, encoder_rates=(2, 4), decoder_rates=(4, 4),
                    vq_strides=(1,))


def test_rejects_nonpositive_rates():
    with pytest.raises(ValueError):
        CodecConfig(sample_rate=16000, encoder_rates=(2, 0), decoder_rates=(0, 2),
                    vq_strides=(1,))
    with pytest.raises(ValueError):
        CodecConfig(sample_rate=0, encoder_rates=(2,), decoder_rates=(2,),
                    vq_strides=(1,))


def test_unknown_activation_rejected():
    with pytest.raises(ValueError):
        CodecConfig(sample_rate=16000, encoder_rates=(4,), decoder_rates=(4,),
                    vq_strides=(1,), activation="gelu")


def test_bits_per_token_edge_cases():
    base = dict(sample_rate=16000, encoder_rates=(4,), decoder_rates=(4,),
                vq_strides=(1,))
    assert CodecConfig(codebook_size=1, **base).bits_per_token == 1
    assert CodecConfig(codebook_size=2, **base).bits_per_token == 1
    assert CodecConfig(codebook_size=3, **base).bits_per_token == 2
    assert CodecConfig(codebook_size=4096, **base).bits_per_token == 12
    assert CodecConfig(codebook_size=4097, **base).bits_per_token == 13


def test_dict_roundtrip_and_canonical_json(tiny_config):
    again = CodecConfig.from_dict(tiny_config.to_dict())
    assert again == tiny_config
    assert json.loads(tiny_config.canonical_json()) == tiny_config.to_dict()
    # canonical form is key-sorted, so logically equal configs hash equal
    assert again.config_hash() == tiny_config.config_hash()
    assert len(tiny_config.config_hash()) == 16


def test_hash_distinguishes_configs(tiny_config):
    other = CodecConfig.from_dict({**tiny_config.to_dict(), "codebook_size": 64})
    assert other.config_hash() != tiny_config.config_hash()


def test_preset_name_lookup(tiny_config):
    assert preset_name_of(preset("general-32k")) == "general-32k"
    assert preset_name_of(tiny_config) is None


def test_unknown_preset_raises():
    with pytest.raises(KeyError, match="general-44k"):
        preset("no-such-preset")


def test_load_config_from_json_file(tmp_path, tiny_config):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(tiny_config.to_dict()))
    assert load_config(path) == tiny_config
