import numpy as np
import pytest

from tovqa.dataset import CRF_LEVELS, AssetEntry, DatasetManifest, SceneEntry


def gauss_blur_same(img, sigma):
    """Reflect-padded Gaussian blur keeping the plane size (degradation
    generator for the test corpus; independent of the package kernels)."""
    size = int(2 * np.ceil(3 * sigma) + 1)
    x = np.arange(size) - size // 2
    k = np.exp(-(x * x) / (2 * sigma * sigma))
    k /= k.sum()
    pad = size // 2
    ext = np.pad(img, pad, mode="symmetric")
    win = np.lib.stride_tricks.sliding_window_view(ext, size, axis=1)
    tmp = win @ k
    win = np.lib.stride_tricks.sliding_window_view(tmp, size, axis=0)
    return win @ k


def make_textures():
    """Three fixed 128x128 textures with wide, smooth histograms."""
    rng = np.random.default_rng(20260810)
    a = gauss_blur_same(rng.uniform(0, 255, (128, 128)), 1.5)
    a = (a - a.min()) / (a.max() - a.min()) * 200 + 25
    yy, xx = np.mgrid[0:128, 0:128]
    b = 100 + 60 * np.sin(xx / 5.0) * np.cos(yy / 7.0) + 0.5 * xx + 0.3 * yy
    b = np.clip(b, 0, 255)
    c = 120 + 45 * np.sin(xx / 3.7 + yy / 11.3) + 35 * np.cos(xx / 13.1 - yy / 5.9)
    c += 30 * np.exp(-(((xx - 70) ** 2 + (yy - 50) ** 2) / 900.0))
    c += gauss_blur_same(rng.standard_normal((128, 128)) * 12, 1.0)
    return [a, b, np.clip(c, 0, 255)]


_NOISE_FIELD = np.random.default_rng(7).standard_normal((128, 128))


def degrade(img, family, severity):
    """Nested degradation families: larger severity is strictly worse."""
    if family == "blur":
        return gauss_blur_same(img, severity)
    if family == "noise":
        field = _NOISE_FIELD[: img.shape[0], : img.shape[1]]
        return np.clip(img + severity * field, 0, 255)
    if family == "quant":
        return np.clip(np.round(img / severity) * severity, 0, 255)
    raise ValueError(family)


@pytest.fixture(scope="session")
def textures():
    return make_textures()


def fixture_manifest(n_scenes=12, with_objects=True, tmp_prefix="media"):
    cats = ["day_good", "day_bad", "night_good"]
    scenes, assets = [], []
    for i in range(n_scenes):
        cid = f"scene{i:02d}"
        objects = (
            {"options": ["car", "bike", "pedestrian"], "present": ["car"]}
            if with_objects
            else None
        )
        scenes.append(
            SceneEntry(
                content_id=cid,
                category=cats[i % 3],
                reference_path=f"{tmp_prefix}/{cid}.y4m",
                objects=objects,
            )
        )
        for crf in CRF_LEVELS:
            assets.append(
                AssetEntry(
                    asset_id=f"{cid}_crf{crf}",
                    content_id=cid,
                    crf=crf,
                    path=f"{tmp_prefix}/{cid}_crf{crf}.y4m",
                )
            )
    return DatasetManifest(scenes=scenes, assets=assets)


@pytest.fixture
def manifest12():
    return fixture_manifest(12)
