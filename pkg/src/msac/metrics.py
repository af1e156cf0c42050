"""Objective reconstruction metrics: SI-SDR and log-spectral L1 distances.

All math runs in float64. The spectral distances average over several
window sizes (quarter-window hop, periodic Hann) so no single resolution
dominates; the mel variant warps frequencies with the HTK mel scale.
None of the metrics align the signals first: a time shift counts as error.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .audio import AudioBuffer

SI_SDR_CAP_DB = 100.0


@dataclass(frozen=True)
class SpectralConfig:
    window_sizes: tuple[int, ...] = (512, 1024, 2048)
    mel_bins: tuple[int, ...] = (80, 80, 80)
    fmin: float = 0.0
    fmax: float | None = None  # None: Nyquist
    log_eps: float = 1e-5
    hops: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if len(self.window_sizes) != len(self.mel_bins):
            raise ValueError("need one mel bin count per window size")
        for w in self.window_sizes:
            if w < 8 or w & (w - 1):
                raise ValueError(f"window size {w} is not a power of two")
        if self.log_eps <= 0:
            raise ValueError("log epsilon must be positive")
        object.__setattr__(self, "hops", tuple(w // 4 for w in self.window_sizes))


def _check_pair(reference: AudioBuffer, estimate: AudioBuffer):
    if reference.sample_rate != estimate.sample_rate:
        raise ValueError(f"sample rates differ: {reference.sample_rate} "
                         f"vs {estimate.sample_rate}")
    if reference.samples.size != estimate.samples.size:
        raise ValueError(f"lengths differ: {reference.samples.size} "
                         f"vs {estimate.samples.size}")
    ref = reference.samples.astype(np.float64)
    if not np.any(ref):
        raise ValueError("reference signal is all zeros")
    return ref, estimate.samples.astype(np.float64)


def si_sdr(reference: AudioBuffer, estimate: AudioBuffer) -> float:
    """Scale-invariant signal-to-distortion ratio in dB.

    The estimate is first projected onto the reference, so any rescaling of
    the estimate cancels. Values are clipped to [-100, +100] dB; the cap
    engages when the error energy underflows relative to the target.
    """
    ref, est = _check_pair(reference, estimate)
    alpha = float(np.dot(est, ref) / np.dot(ref, ref))
    target = alpha * ref
    num = float(np.dot(target, target))
    err = target - est
    den = float(np.dot(err, err))
    if den * 1e10 <= num:
        return SI_SDR_CAP_DB
    if num == 0.0:
        return -SI_SDR_CAP_DB
    return 10.0 * math.log10(num / den)


def _hann_periodic(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def stft_magnitude(x: np.ndarray, window: int, hop: int) -> np.ndarray:
    """(frames, window//2+1) magnitude spectrogram, no padding."""
    if x.size < window:
        raise ValueError(f"signal ({x.size} samples) shorter than window {window}")
    frames = np.lib.stride_tricks.sliding_window_view(x, window)[::hop]
    return np.abs(np.fft.rfft(frames * _hann_periodic(window), axis=1))


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(sample_rate: int, n_fft: int, n_mels: int,
                   fmin: float, fmax: float) -> np.ndarray:
    """(n_mels, n_fft//2+1) triangular filters on the HTK mel scale."""
    points = _mel_to_hz(np.linspace(_hz_to_mel(fmin), _hz_to_mel(fmax), n_mels + 2))
    freqs = np.arange(n_fft // 2 + 1) * (sample_rate / n_fft)
    lower, center, upper = points[:-2], points[1:-1], points[2:]
    up = (freqs[None, :] - lower[:, None]) / (center - lower)[:, None]
    down = (upper[:, None] - freqs[None, :]) / (upper - center)[:, None]
    return np.maximum(0.0, np.minimum(up, down))


def _log_spectra(audio: AudioBuffer, other: AudioBuffer, cfg: SpectralConfig,
                 mel: bool):
    ref, est = _check_pair(audio, other)
    fmax = cfg.fmax if cfg.fmax is not None else audio.sample_rate / 2.0
    for window, hop, bins in zip(cfg.window_sizes, cfg.hops, cfg.mel_bins):
        a = stft_magnitude(ref, window, hop)
        b = stft_magnitude(est, window, hop)
        if mel:
            filt = mel_filterbank(audio.sample_rate, window, bins, cfg.fmin, fmax)
            a, b = a @ filt.T, b @ filt.T
        yield np.log(a + cfg.log_eps), np.log(b + cfg.log_eps)


def mel_l1(reference: AudioBuffer, estimate: AudioBuffer,
           cfg: SpectralConfig = SpectralConfig()) -> float:
    """Mean absolute log-mel difference, averaged over window sizes."""
    dists = [float(np.mean(np.abs(a - b)))
             for a, b in _log_spectra(reference, estimate, cfg, mel=True)]
    return float(np.mean(dists))


def stft_l1(reference: AudioBuffer, estimate: AudioBuffer,
            cfg: SpectralConfig = SpectralConfig()) -> float:
    """Mean absolute log-magnitude difference on linear frequencies."""
    dists = [float(np.mean(np.abs(a - b)))
             for a, b in _log_spectra(reference, estimate, cfg, mel=False)]
    return float(np.mean(dists))
