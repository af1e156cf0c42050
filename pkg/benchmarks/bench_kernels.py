#!/usr/bin/env python3
"""Compare the compiled and pure-NumPy convolution backends.

Times the raw kernels on shapes taken from the encoder/decoder graphs,
then a whole encode/decode pass with each backend forced via monkeypatch.

    python3 benchmarks/bench_kernels.py [--seconds 0.4] [--preset speech-24k]
"""

import argparse
import time

import numpy as np

import msac.kernels as kernels
from msac.audio import AudioBuffer
from msac.config import preset
from msac.model import build

# (label, t, c_in, c_out, kernel, stride, dilation, groups)
SHAPES = [
    ("embed 1->32, k7", 24576, 1, 32, 7, 1, 1, 1),
    ("depthwise k7 d1, C=64", 12288, 64, 64, 7, 1, 1, 64),
    ("depthwise k7 d9, C=128", 6144, 128, 128, 7, 1, 9, 128),
    ("strided down k16 s8, C=256", 1536, 256, 256, 16, 8, 1, 256),
    ("full k7, C=512 (decoder in)", 48, 512, 512, 7, 1, 1, 512),
]


def bench(fn, *args, seconds=0.4):
    fn(*args)  # warm up
    n, start = 0, time.perf_counter()
    while time.perf_counter() - start < seconds:
        fn(*args)
        n += 1
    return (time.perf_counter() - start) / n


def bench_kernels(seconds):
    rng = np.random.default_rng(0)
    names = sorted(kernels.available_backends())
    print(f"{'shape':36}" + "".join(f"{n:>14}" for n in names) + f"{'speedup':>10}")
    for label, t, c_in, c_out, k, stride, dil, groups in SHAPES:
        x = rng.normal(0, 1, (t, c_in)).astype(np.float32)
        w = rng.normal(0, 1, (c_out, c_in // groups, k)).astype(np.float32)
        b = np.zeros(c_out, dtype=np.float32)
        pad = dil * (k - 1) // 2
        times = {}
        for name, mod in kernels.available_backends().items():
            times[name] = bench(mod.conv1d, x, w, b, stride, dil, groups,
                                pad, pad, seconds=seconds)
        row = f"{label:36}" + "".join(f"{times[n] * 1e3:>12.3f}ms" for n in names)
        if len(times) == 2:
            ratio = times["python"] / times["compiled"]
            row += f"{ratio:>9.2f}x"
        print(row)


def bench_end_to_end(preset_name, seconds):
    cfg = preset(preset_name)
    codec = build(cfg, seed=0)
    buf = AudioBuffer(cfg.sample_rate,
                      np.random.default_rng(1).normal(0, 0.2, cfg.sample_rate)
                      .astype(np.float32))
    # dense (groups==1) convs always take the BLAS path, so this isolates
    # the grouped/depthwise kernels the backends actually disagree on
    print(f"\nend-to-end, 1 s of audio, preset {preset_name}:")
    saved = (kernels.conv1d, kernels.conv1d_transposed)
    try:
        for name, mod in sorted(kernels.available_backends().items()):
            kernels.conv1d = mod.conv1d
            kernels.conv1d_transposed = mod.conv1d_transposed
            enc = bench(codec.encode, buf, seconds=seconds)
            codes = codec.encode(buf)
            dec = bench(codec.decode, codes, seconds=seconds)
            print(f"  {name:10} encode {enc * 1e3:8.1f}ms   decode {dec * 1e3:8.1f}ms")
    finally:
        kernels.conv1d, kernels.conv1d_transposed = saved


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seconds", type=float, default=0.4,
                    help="measurement budget per case")
    ap.add_argument("--preset", default="speech-24k")
    args = ap.parse_args()
    print(f"active backend: {kernels.BACKEND}")
    bench_kernels(args.seconds)
    bench_end_to_end(args.preset, args.seconds)


if __name__ == "__main__":
    main()
