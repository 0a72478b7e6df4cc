"""Signal-based baseline metrics: PSNR, SSIM, MS-SSIM.

These are the reporting baselines alongside the learned fusion score. SSIM
uses the canonical 11x11 Gaussian window (sigma 1.5) with valid-region
convolution; MS-SSIM downsamples with a 2x2 box filter for determinism.
"""

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from . import kernels

PSNR_TABLE_CAP_DB = 100.0


@dataclass(frozen=True)
class SsimParams:
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0
    window_size: int = 11
    window_sigma: float = 1.5

    def __post_init__(self):
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be positive")
        if self.window_size % 2 != 1:
            raise ValueError("window side must be odd")


DEFAULT_MSSSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)


@dataclass(frozen=True)
class MsSsimParams:
    weights: Tuple[float, ...] = DEFAULT_MSSSIM_WEIGHTS
    base: SsimParams = field(default_factory=SsimParams)

    def __post_init__(self):
        if any(w <= 0 for w in self.weights):
            raise ValueError("scale weights must be positive")
        if abs(sum(self.weights) - 1.0) > 1e-4:
            raise ValueError(f"scale weights must sum to 1, got {sum(self.weights)}")

    @property
    def scales(self) -> int:
        return len(self.weights)


def _check_planes(ref, dist):
    ref = np.asarray(ref, dtype=np.float64)
    dist = np.asarray(dist, dtype=np.float64)
    if ref.shape != dist.shape:
        raise ValueError(f"plane dimensions differ: {ref.shape} vs {dist.shape}")
    return ref, dist


def psnr(ref_plane, dist_plane, peak: float = 255.0) -> float:
    """10*log10(peak^2 / MSE); +inf for identical planes."""
    ref, dist = _check_planes(ref_plane, dist_plane)
    mse = float(np.mean((ref - dist) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def psnr_for_table(value: float) -> float:
    """Cap the +inf sentinel for tabular output."""
    return min(value, PSNR_TABLE_CAP_DB)


def _ssim_cs_l_maps(ref, dist, params: SsimParams):
    """Luminance and contrast*structure maps over the valid window region."""
    if min(ref.shape) < params.window_size:
        raise ValueError(
            f"plane {ref.shape} smaller than SSIM window ({params.window_size})"
        )
    k = kernels.gaussian_kernel1d(params.window_size, params.window_sigma)
    c1 = (params.k1 * params.dynamic_range) ** 2
    c2 = (params.k2 * params.dynamic_range) ** 2
    c3 = c2 / 2.0

    mu1 = kernels.convolve_sep_valid(ref, k)
    mu2 = kernels.convolve_sep_valid(dist, k)
    s11 = kernels.convolve_sep_valid(ref * ref, k) - mu1 * mu1
    s22 = kernels.convolve_sep_valid(dist * dist, k) - mu2 * mu2
    s12 = kernels.convolve_sep_valid(ref * dist, k) - mu1 * mu2
    np.maximum(s11, 0.0, out=s11)
    np.maximum(s22, 0.0, out=s22)

    lum = (2.0 * mu1 * mu2 + c1) / (mu1 * mu1 + mu2 * mu2 + c1)
    sd = np.sqrt(s11 * s22)
    contrast = (2.0 * sd + c2) / (s11 + s22 + c2)
    structure = (s12 + c3) / (sd + c3)
    return lum, contrast * structure


def ssim(ref_plane, dist_plane, params: SsimParams = SsimParams()) -> float:
    """Mean SSIM over the sliding-window map. Symmetric in its arguments."""
    ref, dist = _check_planes(ref_plane, dist_plane)
    lum, cs = _ssim_cs_l_maps(ref, dist, params)
    return float(np.mean(lum * cs))


def ms_ssim(ref_plane, dist_plane, params: MsSsimParams = MsSsimParams()) -> float:
    """Multi-scale SSIM: cs terms at every scale, luminance at the coarsest.

    Each term is raised to its scale weight; negative cs values are clamped
    to 0 before exponentiation so the result stays real.
    """
    ref, dist = _check_planes(ref_plane, dist_plane)
    base = params.base
    n = params.scales
    # every scale needs >= window pixels after s dyadic downsamplings
    if min(ref.shape) // 2 ** (n - 1) < base.window_size:
        raise ValueError(
            f"plane {ref.shape} too small for {n} scales with window "
            f"{base.window_size}"
        )
    score = 1.0
    lum_last = None
    for s in range(n):
        lum, cs = _ssim_cs_l_maps(ref, dist, base)
        mcs = max(float(np.mean(cs)), 0.0)
        score *= mcs ** params.weights[s]
        if s == n - 1:
            lum_last = max(float(np.mean(lum)), 0.0)
        else:
            ref = kernels.downsample2x2_mean(ref)
            dist = kernels.downsample2x2_mean(dist)
    score *= lum_last ** params.weights[n - 1]
    return score
