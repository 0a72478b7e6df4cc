import json

import pytest

from tovqa.cli import (
    EXIT_CONFIG,
    EXIT_DATA,
    EXIT_OK,
    main,
)

from .e2e_utils import attach_labels, build_workspace


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Prepared 6-scene pipeline: encoded variants + features + split."""
    root = tmp_path_factory.mktemp("pipeline")
    manifest, media, template = build_workspace(root, n_scenes=6, frames=2)
    assert main([
        "prepare", "--manifest", str(manifest), "--media-out", str(media),
        "--encoder-template", template,
    ]) == EXIT_OK
    attach_labels(manifest)
    feat = root / "features"
    assert main([
        "features", "--manifest", str(manifest), "--out", str(feat), "--elementary",
    ]) == EXIT_OK
    split = root / "split.json"
    assert main([
        "split", "--manifest", str(manifest), "--fraction", "0.8",
        "--seed", "7", "--out", str(split),
    ]) == EXIT_OK
    return root, manifest, media, template, feat, split


def test_prepare_is_idempotent(workspace, capsys):
    root, manifest, media, template, _, _ = workspace
    assert main([
        "prepare", "--manifest", str(manifest), "--media-out", str(media),
        "--encoder-template", template,
    ]) == EXIT_OK
    assert "encoded 0 new asset(s)" in capsys.readouterr().out
    doc = json.loads(manifest.read_text())
    assert len(doc["assets"]) == 6 * 4
    assert all((media / f"scene{i:02d}_crf{crf}.y4m").exists()
               for i in range(6) for crf in (30, 36, 42, 48))


def test_prepare_rejects_bad_template(workspace):
    root, manifest, media, _, _, _ = workspace
    assert main([
        "prepare", "--manifest", str(manifest), "--media-out", str(media),
        "--encoder-template", "enc {input} {output}",
    ]) == EXIT_CONFIG


def test_features_skip_up_to_date(workspace, capsys):
    root, manifest, _, _, feat, _ = workspace
    assert main(["features", "--manifest", str(manifest), "--out", str(feat)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "0 computed, 24 up to date" in out
    csvs = sorted(feat.glob("*.features.csv"))
    assert len(csvs) == 24
    sidecar = json.loads((feat / "scene00_crf30.features.csv.json").read_text())
    assert sidecar["feature_config"]["version"] == "tovqa-fc-1"
    elementary = (feat / "scene00_crf48.elementary.csv").read_text().splitlines()
    assert elementary[0] == "frame_idx,psnr,ssim,ms_ssim"
    assert elementary[-1].startswith("pooled,")


def test_split_deterministic(workspace, tmp_path):
    root, manifest, _, _, _, split = workspace
    again = tmp_path / "split2.json"
    assert main([
        "split", "--manifest", str(manifest), "--fraction", "0.8",
        "--seed", "7", "--out", str(again),
    ]) == EXIT_OK
    a = json.loads(split.read_text())
    b = json.loads(again.read_text())
    assert a["train"] == b["train"] and a["val"] == b["val"]
    assert not set(a["train"]) & set(a["val"])


def test_train_predict_evaluate_flow(workspace, tmp_path):
    root, manifest, _, _, feat, split = workspace
    model = tmp_path / "model.json"
    assert main([
        "train", "--manifest", str(manifest), "--features-dir", str(feat),
        "--split", str(split), "--out", str(model),
        "--c", "16", "--gamma", "1.0", "--epsilon", "1.0",
    ]) == EXIT_OK
    assert model.exists()
    validation = json.loads(model.with_suffix(".validation.json").read_text())
    assert validation["n"] >= 3

    preds = tmp_path / "preds.json"
    assert main([
        "predict", "--manifest", str(manifest), "--features-dir", str(feat),
        "--model", str(model), "--out", str(preds),
    ]) == EXIT_OK
    doc = json.loads(preds.read_text())
    assert len(doc["predictions"]) == 24

    labels_path = tmp_path / "labels.json"
    labels_path.write_text(json.dumps(json.loads(manifest.read_text())["labels"]))
    out_dir = tmp_path / "eval"
    assert main([
        "evaluate", "--predictions", str(preds), "--labels", str(labels_path),
        "--manifest", str(manifest), "--out", str(out_dir),
    ]) == EXIT_OK
    report = json.loads((out_dir / "alignment_report.json").read_text())
    assert report["n"] == 24
    assert (out_dir / "residuals.csv").read_text().splitlines()[0] == (
        "asset_id,mos,prediction,residual,category,crf"
    )
    assert (out_dir / "run_manifest.json").exists()


def test_evaluate_key_mismatch_exit_code(workspace, tmp_path):
    preds = tmp_path / "p.json"
    preds.write_text(json.dumps({"a": 1.0, "b": 2.0, "c": 3.0}))
    labels = tmp_path / "l.json"
    labels.write_text(json.dumps({"a": 1.0, "b": 2.0, "x": 3.0}))
    assert main([
        "evaluate", "--predictions", str(preds), "--labels", str(labels),
        "--out", str(tmp_path / "out"),
    ]) == EXIT_DATA


def test_default_model_prediction(workspace, tmp_path):
    root, manifest, _, _, feat, _ = workspace
    out = tmp_path / "baseline.json"
    assert main([
        "predict", "--manifest", str(manifest), "--features-dir", str(feat),
        "--model", "default", "--out", str(out),
    ]) == EXIT_OK
    doc = json.loads(out.read_text())
    values = list(doc["predictions"].values())
    assert all(0.0 <= v <= 100.0 for v in values)


def test_analyze_from_synthetic_ratings(workspace, tmp_path):
    import numpy as np

    from tovqa.stats.mos import LABEL_DIMENSIONS, RatingRecord, write_rating_csv

    root, manifest, _, _, _, _ = workspace
    doc = json.loads(manifest.read_text())
    rng = np.random.default_rng(0)
    records = []
    offsets = [(-0.5, 0.0, 0.5)[p % 3] for p in range(16)]  # consistent rater bias
    for asset in doc["assets"]:
        target = doc["labels"][asset["asset_id"]]
        for p in range(16):
            base = 1.0 + target / 25.0 + offsets[p]
            for dim in LABEL_DIMENSIONS:
                for item in ("i1", "i2"):
                    v = int(np.clip(round(base + rng.uniform(-0.4, 0.4)), 1, 5))
                    records.append(RatingRecord(
                        participant_id=f"p{p:02d}", asset_id=asset["asset_id"],
                        dimension=dim, item_id=item, value=v,
                    ))
    ratings = tmp_path / "ratings.csv"
    write_rating_csv(ratings, records)
    out_dir = tmp_path / "analysis"
    assert main([
        "analyze", "--manifest", str(manifest), "--ratings", str(ratings),
        "--out", str(out_dir),
    ]) == EXIT_OK
    analysis = json.loads((out_dir / "analysis.json").read_text())
    assert analysis["cronbach_alpha"]["value"] > 0.5
    assert analysis["compression_effect"]["method"] in (
        "anova_tukey", "kruskal_mannwhitney"
    )
    adjacent = [p for p in analysis["compression_effect"]["pairwise"] if p["adjacent"]]
    assert all(p["significant"] for p in adjacent)
    assert analysis["environment_effect"] is not None
