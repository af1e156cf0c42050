"""Mono WAV input/output.

Accepts int16 and float32 PCM; everything is float32 in [-1, 1] in memory.
Stereo and other sample widths are rejected rather than silently converted,
and no resampling ever happens here.
"""

from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile


@dataclass
class AudioBuffer:
    sample_rate: int
    samples: np.ndarray  # (n,) float32

    def __post_init__(self):
        if self.sample_rate < 1:
            raise ValueError("sample rate must be positive")
        self.samples = np.ascontiguousarray(self.samples, dtype=np.float32).reshape(-1)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


def read_wav(path) -> AudioBuffer:
    rate, data = wavfile.read(path)
    if data.ndim != 1:
        raise ValueError(f"only mono WAV is supported, got {data.shape[1]} channels")
    if data.dtype == np.int16:
        samples = data.astype(np.float32) / 32768.0
    elif data.dtype == np.float32:
        samples = data
    else:
        raise ValueError(f"unsupported WAV sample format {data.dtype}, "
                         "expected int16 or float32")
    return AudioBuffer(int(rate), samples)


def write_wav(path, audio: AudioBuffer) -> None:
    # float32 output keeps the decoder output exact; values are already in [-1, 1]
    wavfile.write(path, audio.sample_rate,
                  np.ascontiguousarray(audio.samples, dtype=np.float32))


def peak_normalize(audio: AudioBuffer, peak: float = 0.95) -> AudioBuffer:
    """Scale so the largest magnitude equals ``peak``. Silence is returned as is."""
    top = float(np.max(np.abs(audio.samples))) if audio.samples.size else 0.0
    if top == 0.0:
        return AudioBuffer(audio.sample_rate, audio.samples.copy())
    return AudioBuffer(audio.sample_rate, audio.samples * (peak / top))
