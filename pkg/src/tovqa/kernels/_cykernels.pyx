# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implementations of the per-frame pixel kernels.

Same contracts as tovqa.kernels._npkernels; selected at import when built.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def convolve_sep_valid(img, kernel):
    """Separable 2-D correlation with a symmetric 1-D kernel, valid region only."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] a = \
        np.ascontiguousarray(img, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] k = \
        np.ascontiguousarray(kernel, dtype=np.float64)
    cdef Py_ssize_t h = a.shape[0], w = a.shape[1], m = k.shape[0]
    if h < m or w < m:
        raise ValueError(f"plane ({h}, {w}) smaller than kernel ({m})")
    cdef Py_ssize_t wo = w - m + 1, ho = h - m + 1
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] tmp = np.zeros((h, wo))
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] out = np.zeros((ho, wo))
    cdef Py_ssize_t i, j, u
    cdef double kv
    # tap-outer loops keep the inner walk contiguous so the compiler can
    # vectorize the multiply-adds
    for i in range(h):
        for u in range(m):
            kv = k[u]
            for j in range(wo):
                tmp[i, j] += a[i, j + u] * kv
    for i in range(ho):
        for u in range(m):
            kv = k[u]
            for j in range(wo):
                out[i, j] += tmp[i + u, j] * kv
    return out


def downsample2x2_mean(img):
    """2x2 box mean, then decimate. Odd trailing row/column is dropped."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] a = \
        np.ascontiguousarray(img, dtype=np.float64)
    cdef Py_ssize_t h = a.shape[0] // 2, w = a.shape[1] // 2
    if h < 1 or w < 1:
        raise ValueError(f"plane ({a.shape[0]}, {a.shape[1]}) too small to downsample")
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] out = np.empty((h, w))
    cdef Py_ssize_t i, j
    for i in range(h):
        for j in range(w):
            out[i, j] = (a[2 * i, 2 * j] + a[2 * i, 2 * j + 1]
                         + a[2 * i + 1, 2 * j] + a[2 * i + 1, 2 * j + 1]) * 0.25
    return out


def mean_abs_diff(a_in, b_in):
    """Mean of |a - b| over all pixels."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] a = \
        np.ascontiguousarray(a_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] b = \
        np.ascontiguousarray(b_in, dtype=np.float64)
    if a.shape[0] != b.shape[0] or a.shape[1] != b.shape[1]:
        raise ValueError("shape mismatch")
    cdef double acc = 0.0, d
    cdef Py_ssize_t i, j
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            d = a[i, j] - b[i, j]
            acc += d if d >= 0.0 else -d
    return acc / (a.shape[0] * a.shape[1])
