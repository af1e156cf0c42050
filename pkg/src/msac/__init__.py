"""Multi-scale residual vector-quantizing audio codec toolkit."""

from .audio import AudioBuffer, peak_normalize, read_wav, write_wav
from .bitstream import (BitstreamError, BitstreamHeader, bitrate, format_bitrate,
                        make_header, pack, unpack)
from .config import PRESETS, CodecConfig, load_config, preset, preset_name_of
from .kernels import BACKEND, available_backends
from .metrics import SpectralConfig, mel_l1, si_sdr, stft_l1
from .model import Codec, ConvInfo, build, count_parameters, noise_block
from .rvq import (Codebook, LevelConfig, MultiScaleCodes, QuantizeResult,
                  codebook_usage, dequantize, lookup_nearest, quantize)
from .training import (InsufficientDataError, TrainOptions, read_features,
                       residual_mse_trajectory, train_codebooks_ema,
                       write_features)
from .weights import WeightFormatError, load_weights, save_weights

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer", "peak_normalize", "read_wav", "write_wav",
    "BitstreamError", "BitstreamHeader", "bitrate", "format_bitrate",
    "make_header", "pack", "unpack",
    "PRESETS", "CodecConfig", "load_config", "preset", "preset_name_of",
    "BACKEND", "available_backends",
    "SpectralConfig", "mel_l1", "si_sdr", "stft_l1",
    "Codec", "ConvInfo", "build", "count_parameters", "noise_block",
    "Codebook", "LevelConfig", "MultiScaleCodes", "QuantizeResult",
    "codebook_usage", "dequantize", "lookup_nearest", "quantize",
    "InsufficientDataError", "TrainOptions", "read_features",
    "residual_mse_trajectory", "train_codebooks_ema", "write_features",
    "WeightFormatError", "load_weights", "save_weights",
    "__version__",
]
