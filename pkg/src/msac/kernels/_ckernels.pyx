# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled 1-D convolution kernels.

Direct loops over typed memoryviews; sums accumulate in double and are
stored as float32, matching the NumPy fallback up to rounding of the cast.
"""

import numpy as np


def conv1d(const float[:, ::1] x, const float[:, :, ::1] weight, bias,
           int stride, int dilation, int groups, int pad_l, int pad_r):
    cdef Py_ssize_t t_in = x.shape[0]
    cdef Py_ssize_t c_in = x.shape[1]
    cdef Py_ssize_t c_out = weight.shape[0]
    cdef Py_ssize_t c_in_g = weight.shape[1]
    cdef Py_ssize_t kernel = weight.shape[2]
    cdef Py_ssize_t span = dilation * (kernel - 1) + 1
    cdef Py_ssize_t t_out = (t_in + pad_l + pad_r - span) // stride + 1
    cdef Py_ssize_t o_per_g = c_out // groups

    out = np.empty((t_out, c_out), dtype=np.float32)
    cdef float[:, ::1] ov = out

    cdef const float[::1] bv
    cdef bint has_bias = bias is not None
    if has_bias:
        bv = bias

    cdef Py_ssize_t t, o, k, i, gi, base, pos, coff
    cdef double acc
    for t in range(t_out):
        base = t * stride - pad_l
        for o in range(c_out):
            gi = o // o_per_g
            coff = gi * c_in_g
            acc = 0.0
            for k in range(kernel):
                pos = base + k * dilation
                if pos < 0 or pos >= t_in:
                    continue
                for i in range(c_in_g):
                    acc += <double>x[pos, coff + i] * <double>weight[o, i, k]
            if has_bias:
                acc += <double>bv[o]
            ov[t, o] = <float>acc
    return out


def conv1d_transposed(const float[:, ::1] x, const float[:, :, ::1] weight, bias,
                      int stride, int dilation, int groups, int pad_l, int pad_r):
    cdef Py_ssize_t t_in = x.shape[0]
    cdef Py_ssize_t c_in = x.shape[1]
    cdef Py_ssize_t c_out = weight.shape[0]
    cdef Py_ssize_t c_in_g = weight.shape[1]
    cdef Py_ssize_t kernel = weight.shape[2]
    cdef Py_ssize_t t_out = (t_in - 1) * stride - pad_l - pad_r + dilation * (kernel - 1) + 1
    cdef Py_ssize_t o_per_g = c_out // groups

    out = np.empty((t_out, c_out), dtype=np.float32)
    cdef float[:, ::1] ov = out

    cdef const float[::1] bv
    cdef bint has_bias = bias is not None
    if has_bias:
        bv = bias

    # gather form: out[tau] collects x[t] with t*stride + k*dilation == tau + pad_l
    cdef Py_ssize_t tau, o, k, i, gi, num, t, coff
    cdef double acc
    for tau in range(t_out):
        for o in range(c_out):
            gi = o // o_per_g
            coff = gi * c_in_g
            acc = 0.0
            for k in range(kernel):
                num = tau + pad_l - k * dilation
                if num < 0:
                    continue
                if num % stride != 0:
                    continue
                t = num // stride
                if t >= t_in:
                    continue
                for i in range(c_in_g):
                    acc += <double>x[t, coff + i] * <double>weight[o, i, k]
            if has_bias:
                acc += <double>bv[o]
            ov[tau, o] = <float>acc
    return out
