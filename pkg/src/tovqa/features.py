"""The fused feature set: pixel-domain VIF at four scales, a wavelet detail
loss ratio (DLM), and mean co-located pixel difference (motion).

All features are luma-only. The numeric constants live in FeatureConfig and
its version string is recorded next to every feature file and inside every
trained model, so a model always knows which feature definition produced its
training data.
"""

import csv
import hashlib
import io
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .frameio import VideoClip, luma

_EPS = 1e-10
# fidelity-ratio denominators below this are floating-point residue of a
# constant plane (8-bit input scale), not signal
_DEN_TINY = 1e-6

FEATURE_NAMES = ("vif_scale0", "vif_scale1", "vif_scale2", "vif_scale3", "dlm", "motion")
CSV_COLUMNS = ("frame_idx", "vif0", "vif1", "vif2", "vif3", "dlm", "motion")


class DegenerateReferenceWarning(UserWarning):
    """Reference plane carries no usable signal for a fidelity ratio."""


@dataclass(frozen=True)
class FeatureConfig:
    """Versioned record of every constant the features depend on."""

    version: str = "tovqa-fc-1"
    vif_kernel_sizes: Tuple[int, ...] = (17, 9, 5, 3)
    vif_sigma_nsq: float = 2.0
    dlm_levels: int = 4
    dlm_wavelet: str = "db2"
    motion_kernel_size: int = 5
    motion_sigma: float = 1.08

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "vif_kernel_sizes": list(self.vif_kernel_sizes),
            "vif_sigma_nsq": self.vif_sigma_nsq,
            "dlm_levels": self.dlm_levels,
            "dlm_wavelet": self.dlm_wavelet,
            "motion_kernel_size": self.motion_kernel_size,
            "motion_sigma": self.motion_sigma,
        }


DEFAULT_CONFIG = FeatureConfig()


@dataclass(frozen=True)
class FeatureVector:
    vif_scale0: float
    vif_scale1: float
    vif_scale2: float
    vif_scale3: float
    dlm: float
    motion: float

    def __post_init__(self):
        vals = self.as_array()
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"non-finite feature values: {vals}")
        if np.any(vals[:5] < 0) or self.motion < 0:
            raise ValueError(f"negative feature values: {vals}")

    def as_array(self) -> np.ndarray:
        return np.array(
            [getattr(self, name) for name in FEATURE_NAMES], dtype=np.float64
        )

    @classmethod
    def from_array(cls, a: Sequence[float]) -> "FeatureVector":
        a = list(map(float, a))
        if len(a) != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} values, got {len(a)}")
        return cls(*a)


@dataclass(frozen=True)
class ClipFeatures:
    per_frame: List[FeatureVector]
    pooled: FeatureVector = field(init=False)

    def __post_init__(self):
        if not self.per_frame:
            raise ValueError("no frames")
        mat = np.stack([f.as_array() for f in self.per_frame])
        object.__setattr__(self, "pooled", FeatureVector.from_array(mat.mean(axis=0)))


def vif_scales(ref_plane, dist_plane, config: FeatureConfig = DEFAULT_CONFIG):
    """Pixel-domain VIF ratio at four dyadic scales.

    Per scale: Gaussian local moments give a gain g = cov/(var_ref + eps) and
    an additive-noise estimate; the ratio compares the information surviving
    the distortion channel to the information in the reference, with visual
    noise variance sigma_nsq. Planes are low-passed and decimated between
    scales. A constant reference at some scale yields 1.0 for that scale and
    a DegenerateReferenceWarning.
    """
    ref = np.asarray(ref_plane, dtype=np.float64)
    dist = np.asarray(dist_plane, dtype=np.float64)
    if ref.shape != dist.shape:
        raise ValueError(f"plane dimensions differ: {ref.shape} vs {dist.shape}")
    sigma_nsq = config.vif_sigma_nsq
    # the plane shrinks between scales: conv-valid with the next kernel, then
    # decimation by 2; every stage needs room for its kernel
    size = min(ref.shape)
    for s, ksize in enumerate(config.vif_kernel_sizes):
        if s > 0 and size >= ksize:
            size = (size - ksize + 2) // 2  # ceil((size - k + 1) / 2)
        if size < ksize:
            raise ValueError(
                f"plane {ref.shape} too small for VIF scale {s} "
                f"(needs kernel {ksize})"
            )
    values = []
    for s, ksize in enumerate(config.vif_kernel_sizes):
        k = kernels.gaussian_kernel1d(ksize, ksize / 5.0)
        if s > 0:
            ref = kernels.convolve_sep_valid(ref, k)[::2, ::2]
            dist = kernels.convolve_sep_valid(dist, k)[::2, ::2]
        mu1 = kernels.convolve_sep_valid(ref, k)
        mu2 = kernels.convolve_sep_valid(dist, k)
        var1 = kernels.convolve_sep_valid(ref * ref, k) - mu1 * mu1
        var2 = kernels.convolve_sep_valid(dist * dist, k) - mu2 * mu2
        cov = kernels.convolve_sep_valid(ref * dist, k) - mu1 * mu2
        np.maximum(var1, 0.0, out=var1)
        np.maximum(var2, 0.0, out=var2)

        g = cov / (var1 + _EPS)
        np.maximum(g, 0.0, out=g)
        noise = var2 - g * cov
        np.maximum(noise, 0.0, out=noise)

        num = float(np.sum(np.log1p(g * g * var1 / (sigma_nsq + noise))))
        den = float(np.sum(np.log1p(var1 / sigma_nsq)))
        if den <= _DEN_TINY:
            warnings.warn(
                f"constant reference at VIF scale {s}; reporting 1.0",
                DegenerateReferenceWarning,
            )
            values.append(1.0)
        else:
            # enhancement (dist sharper than ref) is clipped at 1
            values.append(min(num / den, 1.0))
    return values


_SQRT3 = math.sqrt(3.0)
_DB2_LO = np.array(
    [1.0 + _SQRT3, 3.0 + _SQRT3, 3.0 - _SQRT3, 1.0 - _SQRT3], dtype=np.float64
) / (4.0 * math.sqrt(2.0))
# quadrature mirror: hi[k] = (-1)^k * lo[L-1-k]
_DB2_HI = _DB2_LO[::-1].copy()
_DB2_HI[1::2] *= -1.0


def _analysis_rows(x: np.ndarray, filt: np.ndarray) -> np.ndarray:
    """Filter along the last axis with half-sample symmetric extension, then
    keep every second sample. Output length is n//2 (n forced even first)."""
    if x.shape[-1] % 2:
        x = np.concatenate([x, x[..., -1:]], axis=-1)
    m = filt.shape[0]
    pad = [(0, 0)] * (x.ndim - 1) + [(m - 2, m)]
    ext = np.pad(x, pad, mode="symmetric")
    win = np.lib.stride_tricks.sliding_window_view(ext, m, axis=-1)
    return (win @ filt)[..., 1::2][..., : x.shape[-1] // 2]


def _dwt2_step(x: np.ndarray):
    """One separable analysis step: approx plus (LH, HL, HH) detail bands."""
    lo = _analysis_rows(x, _DB2_LO)
    hi = _analysis_rows(x, _DB2_HI)
    ll = _analysis_rows(lo.T, _DB2_LO).T
    lh = _analysis_rows(lo.T, _DB2_HI).T
    hl = _analysis_rows(hi.T, _DB2_LO).T
    hh = _analysis_rows(hi.T, _DB2_HI).T
    return ll, (lh, hl, hh)


def _restore_details(ref_band: np.ndarray, dist_band: np.ndarray) -> np.ndarray:
    """Clip distorted coefficients to the reference magnitude where signs
    agree, zero elsewhere. The remainder (dist - restored) is the additive
    impairment, which never enters the numerator."""
    agree = ref_band * dist_band > 0.0
    clipped = np.sign(ref_band) * np.minimum(np.abs(dist_band), np.abs(ref_band))
    return np.where(agree, clipped, 0.0)


def dlm(ref_plane, dist_plane, config: FeatureConfig = DEFAULT_CONFIG) -> float:
    """Detail loss ratio over a 4-level separable wavelet decomposition.

    Per detail subband the cubic energy is reduced to its cube root; the
    subband sums for restored and reference coefficients are compared and the
    ratio cubed. Identity input gives exactly 1; a distorted plane with no
    surviving detail gives ~0.
    """
    ref = np.asarray(ref_plane, dtype=np.float64)
    dist = np.asarray(dist_plane, dtype=np.float64)
    if ref.shape != dist.shape:
        raise ValueError(f"plane dimensions differ: {ref.shape} vs {dist.shape}")
    if min(ref.shape) < 16:
        raise ValueError(f"plane {ref.shape} too small for DLM (needs >= 16)")
    num = 0.0
    den = 0.0
    for _ in range(config.dlm_levels):
        ref, ref_details = _dwt2_step(ref)
        dist, dist_details = _dwt2_step(dist)
        for rb, db in zip(ref_details, dist_details):
            restored = _restore_details(rb, db)
            num += float(np.sum(np.abs(restored) ** 3)) ** (1.0 / 3.0)
            den += float(np.sum(np.abs(rb) ** 3)) ** (1.0 / 3.0)
    if den <= _DEN_TINY:
        warnings.warn(
            "reference has zero detail energy; reporting 1.0",
            DegenerateReferenceWarning,
        )
        return 1.0
    return (num / den) ** 3


def motion(prev_luma, curr_luma, config: FeatureConfig = DEFAULT_CONFIG) -> float:
    """Mean absolute difference of Gaussian-blurred consecutive luma planes."""
    prev = np.asarray(prev_luma, dtype=np.float64)
    curr = np.asarray(curr_luma, dtype=np.float64)
    if prev.shape != curr.shape:
        raise ValueError(f"plane dimensions differ: {prev.shape} vs {curr.shape}")
    k = kernels.gaussian_kernel1d(config.motion_kernel_size, config.motion_sigma)
    return kernels.mean_abs_diff(
        kernels.convolve_sep_valid(prev, k), kernels.convolve_sep_valid(curr, k)
    )


def extract_clip_features(
    ref_clip: VideoClip,
    dist_clip: VideoClip,
    config: FeatureConfig = DEFAULT_CONFIG,
) -> ClipFeatures:
    """Per-frame feature vectors plus their arithmetic mean.

    Motion is the temporal activity of the reference clip (first frame 0 by
    convention); the fidelity features compare distorted to reference frames.
    """
    if (ref_clip.width, ref_clip.height) != (dist_clip.width, dist_clip.height):
        raise ValueError(
            f"clip dimensions differ: {ref_clip.width}x{ref_clip.height} vs "
            f"{dist_clip.width}x{dist_clip.height}"
        )
    if len(ref_clip) != len(dist_clip):
        raise ValueError(
            f"frame counts differ: {len(ref_clip)} vs {len(dist_clip)}"
        )
    per_frame = []
    prev_ref = None
    for rf, df in zip(ref_clip.frames, dist_clip.frames):
        ry = np.asarray(luma(rf), dtype=np.float64)
        dy = np.asarray(luma(df), dtype=np.float64)
        vifs = vif_scales(ry, dy, config)
        d = dlm(ry, dy, config)
        m = 0.0 if prev_ref is None else motion(prev_ref, ry, config)
        per_frame.append(FeatureVector(vifs[0], vifs[1], vifs[2], vifs[3], d, m))
        prev_ref = ry
    return ClipFeatures(per_frame=per_frame)


def content_hash(ref_bytes: bytes, dist_bytes: bytes, config: FeatureConfig) -> str:
    h = hashlib.sha256()
    h.update(config.version.encode())
    h.update(hashlib.sha256(ref_bytes).digest())
    h.update(hashlib.sha256(dist_bytes).digest())
    return h.hexdigest()


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(f".tmp-{path.name}")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_feature_csv(
    path,
    clip_features: ClipFeatures,
    config: FeatureConfig = DEFAULT_CONFIG,
    ref_id: str = "",
    dist_id: str = "",
    source_hash: Optional[str] = None,
) -> None:
    """Feature CSV plus a JSON sidecar (<path>.json) with config and ids.

    Writes are atomic (temp file + rename) so parallel extraction never
    leaves a torn file behind.
    """
    path = Path(path)
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(CSV_COLUMNS)
    for i, fv in enumerate(clip_features.per_frame):
        w.writerow([i] + [repr(float(v)) for v in fv.as_array()])
    _atomic_write_text(path, buf.getvalue())
    sidecar = {
        "feature_config": config.to_dict(),
        "ref_id": ref_id,
        "dist_id": dist_id,
        "pooled": {n: getattr(clip_features.pooled, n) for n in FEATURE_NAMES},
    }
    if source_hash is not None:
        sidecar["source_hash"] = source_hash
    _atomic_write_text(
        path.with_suffix(path.suffix + ".json"),
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n",
    )


def read_feature_csv(path) -> Tuple[ClipFeatures, dict]:
    path = Path(path)
    rows = []
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected feature CSV header: {header}")
        for row in r:
            rows.append(FeatureVector.from_array(row[1:]))
    with open(path.with_suffix(path.suffix + ".json")) as fh:
        sidecar = json.load(fh)
    return ClipFeatures(per_frame=rows), sidecar
