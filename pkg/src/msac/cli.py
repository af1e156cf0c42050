"""Command-line front end: encode, decode, inspect, metrics, train-codebooks.

Machine-readable key=value lines go to stdout; human summaries go to
stderr. Exit codes: 0 success, 2 anything wrong with the user's input or
files, 1 unexpected internal failure.
"""

import argparse
import sys

from . import audio, bitstream, metrics
from .bitstream import BitstreamError
from .config import PRESETS, CodecConfig, load_config, preset
from .model import Codec, build
from .rvq import LevelConfig, codebook_usage, quantize
from .training import (InsufficientDataError, TrainOptions, read_features,
                       residual_mse_trajectory, train_codebooks_ema)
from .weights import WeightFormatError, load_weights, save_weights

USER_ERRORS = (ValueError, KeyError, OSError, BitstreamError, WeightFormatError,
               InsufficientDataError)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _emit(key: str, value) -> None:
    print(f"{key}={value}")


def _add_model_source(p: argparse.ArgumentParser, required: bool = True) -> None:
    group = p.add_mutually_exclusive_group(required=required)
    group.add_argument("--preset", choices=sorted(PRESETS), help="named configuration")
    group.add_argument("--config", help="path to a JSON configuration")
    group.add_argument("--weights", help="path to a weight file")
    p.add_argument("--seed", type=int, default=0,
                   help="parameter init seed when no weight file is given")


def _resolve_codec(args) -> Codec:
    if args.weights:
        return load_weights(args.weights)
    if args.config:
        return build(load_config(args.config), seed=args.seed)
    return build(preset(args.preset), seed=args.seed)


def _config_key(config: CodecConfig) -> tuple[str, str]:
    from .config import preset_name_of
    name = preset_name_of(config)
    if name is not None:
        return "preset", name
    return "config_hash", config.config_hash().hex()


def cmd_encode(args) -> int:
    codec = _resolve_codec(args)
    buf = audio.read_wav(args.input)
    if args.normalize:
        buf = audio.peak_normalize(buf)
    codes = codec.encode(buf)
    header = bitstream.make_header(codec.config, codes, buf.samples.size)
    blob = bitstream.pack(codes, header)
    with open(args.output, "wb") as f:
        f.write(blob)

    bps = bitstream.bitrate(codec.config)
    key, value = _config_key(codec.config)
    _emit(key, value)
    _emit("sample_rate", codec.config.sample_rate)
    _emit("samples", buf.samples.size)
    _emit("latent_frames", header.latent_frames)
    _emit("level_lengths", ",".join(str(n) for n in codes.level_lengths))
    _emit("bitrate_bps", bps)
    _emit("bitrate", bitstream.format_bitrate(bps))
    _emit("bytes", len(blob))
    _emit("output", args.output)
    _say(f"encoded {buf.samples.size} samples ({buf.duration:.2f} s) to "
         f"{args.output} at {bitstream.format_bitrate(bps)}")
    return 0


def _parse_noise(text: str):
    if text == "off":
        return None
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"--noise expects 'off' or an integer seed, got {text!r}") from None


def cmd_decode(args) -> int:
    with open(args.input, "rb") as f:
        blob = f.read()
    codes, header = bitstream.unpack(blob)

    if not (args.weights or args.config or args.preset):
        name = header.preset_name
        if name is None:
            raise ValueError("stream carries a config hash; pass --weights or --config")
        args.preset = name
    codec = _resolve_codec(args)
    if not bitstream.header_matches_config(header, codec.config):
        raise ValueError("stream was produced with a different configuration "
                         "than the one supplied")

    noise_seed = _parse_noise(args.noise)
    out = codec.decode(codes, noise_seed=noise_seed)
    trimmed = audio.AudioBuffer(out.sample_rate,
                                out.samples[:header.original_sample_count])
    audio.write_wav(args.output, trimmed)
    _emit("sample_rate", trimmed.sample_rate)
    _emit("samples", trimmed.samples.size)
    _emit("noise", args.noise)
    _emit("output", args.output)
    _say(f"decoded {trimmed.samples.size} samples ({trimmed.duration:.2f} s) "
         f"to {args.output}")
    return 0


def cmd_inspect(args) -> int:
    with open(args.input, "rb") as f:
        blob = f.read()
    # full unpack (not just the header) so corrupt payloads fail before any output
    _, header = bitstream.unpack(blob)

    config = None
    if args.config:
        config = load_config(args.config)
    elif header.preset_name is not None:
        config = preset(header.preset_name)

    total_bits = header.bits_per_token * sum(header.level_lengths)
    lines: list[tuple[str, object]] = [
        ("version", header.version),
        ("config", header.preset_name or header.config_id.hex()),
        ("sample_rate", header.sample_rate),
        ("original_sample_count", header.original_sample_count),
        ("latent_frames", header.latent_frames),
        ("bits_per_token", header.bits_per_token),
        ("levels", header.num_levels),
        ("strides", ",".join(str(w) for w in header.strides)),
        ("level_lengths", ",".join(str(n) for n in header.level_lengths)),
        ("payload_bytes", (total_bits + 7) // 8),
    ]

    if config is not None:
        if not bitstream.header_matches_config(header, config):
            raise ValueError("supplied config does not match this stream")
        rates = config.token_rates()
        bps = bitstream.bitrate(config)
        lines.append(("token_rates_hz", ",".join(f"{r:.6g}" for r in rates)))
        lines.append(("token_rates_rounded_hz",
                      ",".join(str(round(r)) for r in rates)))
        lines.append(("bitrate_bps", bps))
        lines.append(("bitrate", bitstream.format_bitrate(bps)))

    for key, value in lines:
        _emit(key, value)
    if config is None:
        _say("config is not a known preset; pass --config for bitrate accounting")
    return 0


def cmd_metrics(args) -> int:
    ref = audio.read_wav(args.reference)
    est = audio.read_wav(args.estimate)
    selected = args.set or ["sisdr", "mel", "stft"]
    if "sisdr" in selected:
        _emit("sisdr", f"{metrics.si_sdr(ref, est):.6f}")
    if "mel" in selected:
        _emit("mel", f"{metrics.mel_l1(ref, est):.6f}")
    if "stft" in selected:
        _emit("stft", f"{metrics.stft_l1(ref, est):.6f}")
    return 0


def cmd_train_codebooks(args) -> int:
    features = read_features(args.features)
    codec = _resolve_codec(args)
    config = codec.config
    if features.shape[1] != config.latent_channels:
        raise ValueError(f"features have {features.shape[1]} channels, config "
                         f"expects {config.latent_channels}")

    level_cfgs = [LevelConfig(w, config.codebook_size, config.codeword_dim)
                  for w in config.vq_strides]
    opts = TrainOptions(iterations=args.iters, rng_seed=args.seed)
    books = train_codebooks_ema(features, level_cfgs, opts)
    codec.levels = [(cfg, cb) for cfg, cb in zip(level_cfgs, books)]

    trajectory = residual_mse_trajectory(features, codec.levels)
    result = quantize(features, codec.levels,
                      normalize_lookup=config.lookup_normalized)
    usage = codebook_usage(result.codes, codec.levels)

    save_weights(args.output, codec)
    _emit("frames", features.shape[0])
    _emit("mse_initial", f"{trajectory[0]:.8g}")
    for i, value in enumerate(trajectory[1:]):
        _emit(f"mse_after_level{i}", f"{value:.8g}")
    for i, u in enumerate(usage):
        _emit(f"entropy_level{i}", f"{u.entropy:.6f}")
    _emit("output", args.output)
    _say(f"trained {len(books)} codebooks on {features.shape[0]} frames, "
         f"wrote {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msac",
        description="multi-scale residual vector-quantizing audio codec tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="WAV to token stream")
    p.add_argument("input")
    p.add_argument("output")
    _add_model_source(p)
    p.add_argument("--normalize", action="store_true",
                   help="peak-normalize the input before encoding")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="token stream to WAV")
    p.add_argument("input")
    p.add_argument("output")
    _add_model_source(p, required=False)
    p.add_argument("--noise", default="off", metavar="off|SEED",
                   help="decoder noise: 'off' or an integer seed")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("inspect", help="print token stream header and rates")
    p.add_argument("input")
    p.add_argument("--config", help="JSON config for non-preset streams")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("metrics", help="compare two WAV files")
    p.add_argument("reference")
    p.add_argument("estimate")
    p.add_argument("--set", action="append", choices=["sisdr", "mel", "stft"],
                   help="metric to compute (repeatable; default: all)")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("train-codebooks", help="fit codebooks to a feature file")
    p.add_argument("features")
    p.add_argument("output")
    _add_model_source(p)
    p.add_argument("--iters", type=int, default=100, help="k-means iteration budget per level")
    p.set_defaults(func=cmd_train_codebooks)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except USER_ERRORS as exc:
        _say(f"error: {exc}")
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort guard for exit code 1
        _say(f"internal error: {type(exc).__name__}: {exc}")
        return 1


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
