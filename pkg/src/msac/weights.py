"""Codec weight files.

Layout, all integers little-endian:

    magic  b"MSAC"
    u32    format version (currently 1)
    u32    config length, then canonical JSON config
    u32    tensor count
    per tensor:
        u16   name length, then UTF-8 name
        u8    rank
        u32   dim per axis
        f32   raw data, C order

The embedded config is authoritative: loading builds a codec from it and
then fills every parameter, so a file always round-trips to a working codec
without any external preset knowledge.
"""

import json
import struct

import numpy as np

from .config import CodecConfig
from .model import Codec, build

MAGIC = b"MSAC"
VERSION = 1


class WeightFormatError(ValueError):
    pass


def save_weights(path, codec: Codec) -> None:
    params = list(codec.named_params())
    config_blob = codec.config.canonical_json().encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<I", len(config_blob)))
        f.write(config_blob)
        f.write(struct.pack("<I", len(params)))
        for name, arr in params:
            encoded = name.encode("utf-8")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<B", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def _read(f, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise WeightFormatError(f"weight file truncated while reading {what}")
    return data


def load_weights(path) -> Codec:
    with open(path, "rb") as f:
        if _read(f, 4, "magic") != MAGIC:
            raise WeightFormatError("not a codec weight file (bad magic)")
        version = struct.unpack("<I", _read(f, 4, "version"))[0]
        if version != VERSION:
            raise WeightFormatError(f"unsupported weight format version {version}, "
                                    f"expected {VERSION}")
        config_len = struct.unpack("<I", _read(f, 4, "config length"))[0]
        config_blob = _read(f, config_len, "config")
        try:
            config = CodecConfig.from_dict(json.loads(config_blob))
        except (ValueError, TypeError, KeyError) as exc:
            raise WeightFormatError(f"embedded config is invalid: {exc}") from exc

        codec = build(config, seed=None)
        params = codec.param_dict()
        seen = set()

        count = struct.unpack("<I", _read(f, 4, "tensor count"))[0]
        for _ in range(count):
            name_len = struct.unpack("<H", _read(f, 2, "tensor name length"))[0]
            name = _read(f, name_len, "tensor name").decode("utf-8")
            rank = struct.unpack("<B", _read(f, 1, f"rank of {name}"))[0]
            shape = struct.unpack(f"<{rank}I", _read(f, 4 * rank, f"shape of {name}"))
            if name not in params:
                raise WeightFormatError(f"tensor {name} does not exist in this "
                                        "architecture")
            target = params[name]
            if tuple(shape) != target.shape:
                raise WeightFormatError(f"tensor {name} has shape {tuple(shape)}, "
                                        f"config implies {target.shape}")
            n_bytes = 4 * int(np.prod(shape, dtype=np.int64))
            data = _read(f, n_bytes, f"data of {name}")
            value = np.frombuffer(data, dtype="<f4").reshape(shape)
            if not np.all(np.isfinite(value)):
                raise WeightFormatError(f"tensor {name} contains non-finite values")
            target[...] = value
            seen.add(name)

    missing = sorted(set(params) - seen)
    if missing:
        raise WeightFormatError(f"weight file is missing tensors: {', '.join(missing[:5])}")
    return codec
