"""Pixel-level kernels with a compiled fast path.

The compiled Cython extension is preferred when present; a NumPy
implementation with identical contracts is the fallback. Selection happens
once at import and can be forced with TOVQA_KERNEL_BACKEND=numpy|compiled.
"""

import os

from . import _npkernels

_requested = os.environ.get("TOVQA_KERNEL_BACKEND", "")

if _requested == "numpy":
    _impl = _npkernels
else:
    try:
        from . import _cykernels as _impl  # type: ignore[no-redef]
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "TOVQA_KERNEL_BACKEND=compiled but the extension is not built; "
                "run `pip install -e . --no-build-isolation`"
            )
        _impl = _npkernels

convolve_sep_valid = _impl.convolve_sep_valid
downsample2x2_mean = _impl.downsample2x2_mean
mean_abs_diff = _impl.mean_abs_diff


def backend_name() -> str:
    return _impl.BACKEND


def gaussian_kernel1d(size: int, sigma: float):
    """Normalized 1-D Gaussian, odd size."""
    import numpy as np

    if size % 2 != 1 or size < 1:
        raise ValueError("kernel size must be odd and positive")
    x = np.arange(size, dtype=np.float64) - size // 2
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()
