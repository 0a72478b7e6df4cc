#!/usr/bin/env python3
"""Regenerate the frozen generic baseline model shipped with the package.

The baseline is trained on a synthetic generic-content corpus whose labels
follow a streaming-style quality curve (a fixed blend of the fidelity
features). It deliberately knows nothing about teleoperation ratings; domain
retraining is expected to beat it. Deterministic: rerunning reproduces the
committed file byte for byte.
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from tovqa import features, fusion  # noqa: E402


def generic_label(fv: features.FeatureVector) -> float:
    """Streaming-like quality curve: fidelity-heavy, mild motion penalty."""
    q = (
        0.30 * fv.vif_scale0
        + 0.10 * fv.vif_scale1
        + 0.10 * fv.vif_scale2
        + 0.10 * fv.vif_scale3
        + 0.40 * fv.dlm
    )
    return float(np.clip(100.0 * q - 0.2 * fv.motion, 0.0, 100.0))


def main() -> None:
    rng = np.random.default_rng(424242)
    rows = []
    yy, xx = np.mgrid[0:96, 0:96]
    for i in range(48):
        base = (
            110
            + 50 * np.sin(xx / (3.0 + i % 7) + i)
            + 40 * np.cos(yy / (5.0 + i % 5) - i / 3.0)
            + rng.uniform(-25, 25, (96, 96))
        )
        base = np.clip(base, 0, 255)
        sev = (i % 8) / 7.0
        blur_sigma = 0.2 + 2.8 * sev
        size = int(2 * np.ceil(3 * blur_sigma) + 1)
        t = np.arange(size) - size // 2
        k = np.exp(-(t * t) / (2 * blur_sigma * blur_sigma))
        k /= k.sum()
        ext = np.pad(base, size // 2, mode="symmetric")
        win = np.lib.stride_tricks.sliding_window_view(ext, size, axis=1)
        tmp = win @ k
        win = np.lib.stride_tricks.sliding_window_view(tmp, size, axis=0)
        dist = np.clip(win @ k + rng.normal(0, 5 * sev, base.shape), 0, 255)

        vifs = features.vif_scales(base, dist)
        fv = features.FeatureVector(
            vifs[0], vifs[1], vifs[2], vifs[3],
            features.dlm(base, dist),
            float(rng.uniform(0.5, 12.0)),
        )
        rows.append(
            fusion.TrainingRow(clip_id=f"generic{i:03d}", features=fv,
                               label=generic_label(fv))
        )

    model = fusion.train(
        fusion.TrainingSet.from_rows(rows),
        fusion.SvrHyperparams(c=16.0, gamma=0.5, epsilon=1.0),
    )
    out = pathlib.Path(__file__).resolve().parents[1] / "src/tovqa/models/default_model.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(fusion.save_model(model))
    print(f"wrote {out} ({len(model.support_vectors)} support vectors)")


if __name__ == "__main__":
    main()
