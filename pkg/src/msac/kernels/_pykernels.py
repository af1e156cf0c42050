"""NumPy implementations of the 1-D convolution kernels.

Fallback used when the compiled extension is unavailable. Both backends
accumulate in float64 and store float32, so they agree to within rounding
of the final cast.
"""

import numpy as np


def conv1d(x, weight, bias, stride, dilation, groups, pad_l, pad_r):
    """Cross-correlate ``x`` (T, Cin) with ``weight`` (Cout, Cin/g, K)."""
    t_in = x.shape[0]
    c_out, c_in_g, kernel = weight.shape
    span = dilation * (kernel - 1) + 1
    t_out = (t_in + pad_l + pad_r - span) // stride + 1

    xp = x
    if pad_l or pad_r:
        xp = np.zeros((t_in + pad_l + pad_r, x.shape[1]), dtype=np.float32)
        xp[pad_l:pad_l + t_in] = x

    # (t_out, kernel, c_in) gather of the sliding windows
    idx = np.arange(t_out)[:, None] * stride + np.arange(kernel)[None, :] * dilation
    g = xp[idx]

    if groups == 1:
        g2 = g.reshape(t_out, kernel * x.shape[1]).astype(np.float64)
        w2 = weight.transpose(0, 2, 1).reshape(c_out, kernel * c_in_g).astype(np.float64)
        out = g2 @ w2.T
    elif groups == x.shape[1] and c_out == groups:
        # depthwise: one filter per channel
        out = np.einsum("tkc,ck->tc", g, weight[:, 0, :], dtype=np.float64)
    else:
        out = np.empty((t_out, c_out), dtype=np.float64)
        o_per_g = c_out // groups
        for gi in range(groups):
            gs = g[:, :, gi * c_in_g:(gi + 1) * c_in_g]
            ws = weight[gi * o_per_g:(gi + 1) * o_per_g]
            out[:, gi * o_per_g:(gi + 1) * o_per_g] = np.einsum(
                "tki,oik->to", gs, ws, dtype=np.float64
            )
    if bias is not None:
        out = out + bias.astype(np.float64)
    return out.astype(np.float32)


def conv1d_transposed(x, weight, bias, stride, dilation, groups, pad_l, pad_r):
    """Transposed convolution via zero-stuffing plus a flipped-kernel conv."""
    t_in = x.shape[0]
    kernel = weight.shape[2]

    stuffed = x
    if stride > 1:
        stuffed = np.zeros(((t_in - 1) * stride + 1, x.shape[1]), dtype=np.float32)
        stuffed[::stride] = x

    flipped = np.ascontiguousarray(weight[:, :, ::-1])
    full_pad = dilation * (kernel - 1)
    out = conv1d(stuffed, flipped, bias, 1, dilation, groups, full_pad, full_pad)
    if pad_l or pad_r:
        out = np.ascontiguousarray(out[pad_l:out.shape[0] - pad_r])
    return out
