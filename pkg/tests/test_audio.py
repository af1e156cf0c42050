import numpy as np
import pytest
from scipy.io import wavfile

from msac.audio import AudioBuffer, peak_normalize, read_wav, write_wav


def test_float32_roundtrip(tmp_path, rng):
    path = tmp_path / "a.wav"
    samples = rng.normal(0, 0.3, 1000).astype(np.float32).clip(-1, 1)
    write_wav(path, AudioBuffer(16000, samples))
    back = read_wav(path)
    assert back.sample_rate == 16000
    np.testing.assert_array_equal(back.samples, samples)


def test_int16_input_is_scaled(tmp_path):
    path = tmp_path / "i.wav"
    wavfile.write(path, 8000, np.array([0, 16384, -32768], dtype=np.int16))
    back = read_wav(path)
    assert back.samples.dtype == np.float32
    np.testing.assert_allclose(back.samples, [0.0, 0.5, -1.0], atol=1e-7)


def test_stereo_rejected(tmp_path, rng):
    path = tmp_path / "s.wav"
    wavfile.write(path, 8000, rng.normal(0, 0.1, (100, 2)).astype(np.float32))
    with pytest.raises(ValueError, match="mono"):
        read_wav(path)


def test_unsupported_sample_format_rejected(tmp_path):
    path = tmp_path / "d.wav"
    wavfile.write(path, 8000, np.zeros(10, dtype=np.float64))
    with pytest.raises(ValueError, match="int16 or float32"):
        read_wav(path)


def test_duration():
    assert AudioBuffer(8000, np.zeros(4000, np.float32)).duration == 0.5


def test_peak_normalize():
    buf = AudioBuffer(8000, np.array([0.1, -0.5], np.float32))
    out = peak_normalize(buf, peak=0.95)
    assert out.samples.min() == pytest.approx(-0.95)
    silent = peak_normalize(AudioBuffer(8000, np.zeros(5, np.float32)))
    np.testing.assert_array_equal(silent.samples, np.zeros(5, np.float32))
