import json
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tovqa.dataset import (
    CRF_LEVELS,
    AssetEntry,
    DatasetManifest,
    EncoderError,
    LabelRow,
    ManifestError,
    SceneEntry,
    curation_warnings,
    encode_variants,
    join_labels,
    load_manifest,
    make_scene_folds,
    save_manifest,
    split_by_scene,
)
from tovqa.stats.mos import LABEL_DIMENSIONS, RatingRecord

from .conftest import fixture_manifest


def paper_manifest():
    """Category sizes from the study: 18 day_good, 10 day_bad, 11 night_good."""
    scenes = []
    for cat, count in (("day_good", 18), ("day_bad", 10), ("night_good", 11)):
        for i in range(count):
            scenes.append(
                SceneEntry(
                    content_id=f"{cat}_{i:02d}", category=cat,
                    reference_path=f"media/{cat}_{i:02d}.y4m",
                )
            )
    assets = [
        AssetEntry(
            asset_id=f"{s.content_id}_crf{crf}", content_id=s.content_id,
            crf=crf, path=f"media/{s.content_id}_crf{crf}.y4m",
        )
        for s in scenes
        for crf in CRF_LEVELS
    ]
    return DatasetManifest(scenes=scenes, assets=assets)


class TestManifest:
    def test_full_study_shape(self):
        m = paper_manifest()
        assert len(m.scenes) == 39
        assert len(m.distorted_assets()) == 156

    def test_round_trip(self, tmp_path):
        m = paper_manifest()
        m.labels = {"day_good_00_crf30": 81.5}
        path = tmp_path / "manifest.json"
        save_manifest(m, path)
        again = load_manifest(path)
        assert len(again.scenes) == 39
        assert again.labels == m.labels

    def test_closed_crf_set(self):
        with pytest.raises(ManifestError, match="closed set"):
            AssetEntry(asset_id="x", content_id="s", crf=25, path="p")

    def test_unknown_category(self):
        with pytest.raises(ManifestError, match="category"):
            SceneEntry(content_id="s", category="dusk_ok", reference_path="p")

    def test_dangling_scene_reference(self):
        scene = SceneEntry(content_id="s1", category="day_good", reference_path="p")
        asset = AssetEntry(asset_id="a", content_id="ghost", crf=30, path="p")
        with pytest.raises(ManifestError, match="unknown scene"):
            DatasetManifest(scenes=[scene], assets=[asset])

    def test_duplicate_asset(self):
        scene = SceneEntry(content_id="s1", category="day_good", reference_path="p")
        a = AssetEntry(asset_id="a", content_id="s1", crf=30, path="p")
        b = AssetEntry(asset_id="a", content_id="s1", crf=36, path="p")
        with pytest.raises(ManifestError, match="duplicate asset_id"):
            DatasetManifest(scenes=[scene], assets=[a, b])

    def test_duplicate_pair(self):
        scene = SceneEntry(content_id="s1", category="day_good", reference_path="p")
        a = AssetEntry(asset_id="a", content_id="s1", crf=30, path="p")
        b = AssetEntry(asset_id="b", content_id="s1", crf=30, path="p2")
        with pytest.raises(ManifestError, match="duplicate .*pair"):
            DatasetManifest(scenes=[scene], assets=[a, b])

    def test_schema_version_enforced(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text(json.dumps({"schema_version": "v99", "scenes": []}))
        with pytest.raises(ManifestError, match="schema"):
            load_manifest(p)

    def test_curation_warnings(self):
        scenes = [
            SceneEntry("ok", "day_good", "p", width=1920, height=1200, fps=30.0),
            SceneEntry("small", "day_good", "p", width=1280, height=720, fps=30.0),
            SceneEntry("slow", "day_good", "p", fps=5.0),
            SceneEntry("long", "day_good", "p", duration_s=12.0),
        ]
        warnings = curation_warnings(DatasetManifest(scenes=scenes))
        assert len(warnings) == 3
        assert any("small" in w for w in warnings)


FAKE_ENCODER = """
import shutil, sys
src, dst, crf = sys.argv[1], sys.argv[2], sys.argv[3]
if crf == "48" and "fail48" in src:
    sys.exit(9)
shutil.copyfile(src, dst)
"""


class TestEncodeVariants:
    @pytest.fixture
    def encoder(self, tmp_path):
        script = tmp_path / "fake_encoder.py"
        script.write_text(FAKE_ENCODER)
        return f"{sys.executable} {script} {{input}} {{output}} --crf={{crf}}".replace(
            "--crf={crf}", "{crf}"
        )

    def test_encodes_all_levels(self, tmp_path, encoder):
        ref = tmp_path / "scene.y4m"
        ref.write_bytes(b"YUV4MPEG2 W2 H2 F10:1 C420\nFRAME\n\x00\x00\x00\x00\x00\x00")
        scene = SceneEntry("scene", "day_good", str(ref))
        assets = encode_variants(scene, CRF_LEVELS, encoder, tmp_path / "out")
        assert [a.crf for a in assets] == list(CRF_LEVELS)
        assert all((tmp_path / "out" / f"scene_crf{a.crf}.y4m").exists() for a in assets)

    def test_empty_crf_list_no_invocation(self, tmp_path, encoder):
        scene = SceneEntry("ghost", "day_good", str(tmp_path / "missing.y4m"))
        # would raise about the missing reference if anything were invoked
        assert encode_variants(scene, [], encoder, tmp_path) == []

    def test_template_validated_first(self, tmp_path):
        scene = SceneEntry("s", "day_good", str(tmp_path / "missing.y4m"))
        with pytest.raises(EncoderError, match="crf"):
            encode_variants(scene, [30], "enc {input} {output}", tmp_path)

    def test_nonzero_exit(self, tmp_path, encoder):
        ref = tmp_path / "fail48.y4m"
        ref.write_bytes(b"x")
        scene = SceneEntry("fail48", "day_good", str(ref))
        with pytest.raises(EncoderError, match="exited with 9"):
            encode_variants(scene, [48], encoder, tmp_path / "out")

    def test_missing_output(self, tmp_path):
        ref = tmp_path / "s.y4m"
        ref.write_bytes(b"x")
        scene = SceneEntry("s", "day_good", str(ref))
        template = f"{sys.executable} -c pass {{input}}-unused {{output}}-unused {{crf}}"
        with pytest.raises(EncoderError, match="no output"):
            encode_variants(scene, [30], template, tmp_path / "out")


class TestSplit:
    def test_reproduces_study_counts_for_every_seed(self):
        m = paper_manifest()
        for seed in range(60):
            split = split_by_scene(m, 0.8, seed)
            by_cat = {"day_good": [0, 0], "day_bad": [0, 0], "night_good": [0, 0]}
            for s in m.scenes:
                by_cat[s.category][0 if s.content_id in split.train else 1] += 1
            assert by_cat == {
                "day_good": [15, 3], "day_bad": [8, 2], "night_good": [9, 2]
            }

    def test_fraction_one_rejected(self):
        with pytest.raises(ValueError, match="nonempty"):
            split_by_scene(paper_manifest(), 1.0, 0)

    def test_deterministic(self):
        m = paper_manifest()
        assert split_by_scene(m, 0.8, 7) == split_by_scene(m, 0.8, 7)

    def test_small_category_rejected(self):
        scenes = [
            SceneEntry("a", "day_good", "p"),
            SceneEntry("b", "day_good", "p"),
            SceneEntry("c", "day_bad", "p"),
        ]
        with pytest.raises(ValueError, match="need >= 2"):
            split_by_scene(DatasetManifest(scenes=scenes), 0.8, 0)

    @settings(max_examples=80, deadline=None)
    @given(
        sizes=st.lists(st.integers(2, 12), min_size=1, max_size=3),
        fraction=st.floats(0.1, 0.95),
        seed=st.integers(0, 2**31),
    )
    def test_disjoint_union_property(self, sizes, fraction, seed):
        cats = ["day_good", "day_bad", "night_good"]
        scenes = [
            SceneEntry(f"{cats[c]}_{i}", cats[c], "p")
            for c, n in enumerate(sizes)
            for i in range(n)
        ]
        m = DatasetManifest(scenes=scenes)
        split = split_by_scene(m, fraction, seed)
        all_ids = {s.content_id for s in scenes}
        assert split.train | split.val == all_ids
        assert not split.train & split.val
        assert split.val  # validation never empty
        assert split_by_scene(m, fraction, seed) == split


class TestFolds:
    def test_scene_disjoint(self):
        m = fixture_manifest(9)
        folds = make_scene_folds(m, 3, seed=1)
        scenes_per_fold = [
            {aid.rsplit("_crf", 1)[0] for aid in fold} for fold in folds
        ]
        for i in range(3):
            for j in range(i + 1, 3):
                assert not scenes_per_fold[i] & scenes_per_fold[j]

    def test_bad_k(self):
        with pytest.raises(ValueError, match="folds"):
            make_scene_folds(fixture_manifest(4), 9, seed=0)


def ratings(asset_id, n_participants, value=4):
    out = []
    for p in range(n_participants):
        for dim in LABEL_DIMENSIONS:
            out.append(
                RatingRecord(
                    participant_id=f"p{p:02d}", asset_id=asset_id,
                    dimension=dim, item_id="i1", value=value,
                )
            )
    return out


class TestJoinLabels:
    def test_two_assets_enough_raters(self, manifest12):
        records = ratings("scene00_crf30", 15) + ratings("scene00_crf36", 15, value=2)
        rows = join_labels(manifest12, records)
        assert len(rows) == 2
        assert not any(r.flagged for r in rows)
        by_id = {r.asset_id: r for r in rows}
        assert by_id["scene00_crf30"].label.mos_vmaf == 75.0
        assert by_id["scene00_crf36"].label.mos_vmaf == 25.0

    def test_under_threshold_flagged(self, manifest12):
        rows = join_labels(manifest12, ratings("scene00_crf30", 3))
        assert rows[0].flagged
        assert "3 raters" in rows[0].reason

    def test_unknown_asset(self, manifest12):
        bad = [
            RatingRecord(
                participant_id="p", asset_id="ghost_crf30",
                dimension="detail_loss", item_id="i", value=3,
            )
        ]
        with pytest.raises(ManifestError, match="unknown asset"):
            join_labels(manifest12, bad)

    def test_empty_export(self, manifest12):
        with pytest.raises(ValueError, match="empty"):
            join_labels(manifest12, [])

    def test_dmos_mode_without_reference_flags(self, manifest12):
        rows = join_labels(manifest12, ratings("scene00_crf30", 15), dmos=True)
        assert rows[0].flagged
        assert "no rated reference" in rows[0].reason

    def test_dmos_mode_with_reference(self):
        m = fixture_manifest(12)
        m.assets.append(
            AssetEntry(asset_id="scene00_ref", content_id="scene00", crf=0, path="p")
        )
        m.validate()
        records = ratings("scene00_crf30", 15, value=3) + ratings("scene00_ref", 15, value=5)
        rows = join_labels(m, records, dmos=True)
        (row,) = rows
        # 100 - 25 * (5 - 3) = 50
        assert row.label.mos_vmaf == pytest.approx(50.0)
        assert not row.flagged

    def test_label_row_is_frozen(self):
        row = LabelRow("a", None, False)  # type: ignore[arg-type]
        with pytest.raises(AttributeError):
            row.flagged = True
