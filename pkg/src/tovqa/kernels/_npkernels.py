"""NumPy implementations of the per-frame pixel kernels.

Fallback backend used when the compiled extension is unavailable. Both
backends operate on float64 C-contiguous planes and must agree to within
normal float64 rounding (the suite checks 1e-9 relative).
"""

import numpy as np

BACKEND = "numpy"


def convolve_sep_valid(img, kernel):
    """Separable 2-D correlation with a symmetric 1-D kernel, valid region only.

    out[i, j] = sum_u sum_v img[i+u, j+v] * kernel[u] * kernel[v]
    """
    img = np.ascontiguousarray(img, dtype=np.float64)
    k = np.ascontiguousarray(kernel, dtype=np.float64)
    m = k.shape[0]
    if img.shape[0] < m or img.shape[1] < m:
        raise ValueError(f"plane {img.shape} smaller than kernel ({m})")
    # rows pass: windows along axis 1, then columns pass along axis 0
    win = np.lib.stride_tricks.sliding_window_view(img, m, axis=1)
    tmp = win @ k
    win = np.lib.stride_tricks.sliding_window_view(tmp, m, axis=0)
    return np.ascontiguousarray(win @ k)


def downsample2x2_mean(img):
    """2x2 box mean, then decimate. Odd trailing row/column is dropped."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[0] // 2, img.shape[1] // 2
    if h < 1 or w < 1:
        raise ValueError(f"plane {img.shape} too small to downsample")
    v = img[: 2 * h, : 2 * w].reshape(h, 2, w, 2)
    return np.ascontiguousarray(v.mean(axis=(1, 3)))


def mean_abs_diff(a, b):
    """Mean of |a - b| over all pixels."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.mean(np.abs(a - b)))
