"""Dataset manifest handling: scenes, encoded variants, scene-disjoint
splits and label joins.

The encoder is an external user-configured command; the toolkit never links
codec libraries.
"""

import json
import math
import random
import shlex
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .stats.mos import LABEL_DIMENSIONS, MosLabel, RatingRecord, aggregate_mos

MANIFEST_SCHEMA_VERSION = "tovqa-manifest-1"
CATEGORIES = ("day_good", "day_bad", "night_good")
CRF_LEVELS = (30, 36, 42, 48)
DEFAULT_MIN_RATERS = 15  # ITU-T P.910: at least 15 independent evaluations

DEFAULT_ENCODER_TEMPLATE = (
    "ffmpeg -y -loglevel error -i {input} -c:v libx264 -preset slow "
    "-crf {crf} -an {output}"
)


class ManifestError(ValueError):
    pass


class EncoderError(RuntimeError):
    pass


@dataclass(frozen=True)
class SceneEntry:
    content_id: str
    category: str
    reference_path: str
    duration_s: float = 8.0
    # declared source metadata for the curation checks; not content analysis
    width: Optional[int] = None
    height: Optional[int] = None
    fps: Optional[float] = None
    objects: Optional[dict] = None  # {"options": [...], "present": [...]}

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ManifestError(
                f"unknown category {self.category!r} (allowed: {CATEGORIES})"
            )


@dataclass(frozen=True)
class AssetEntry:
    asset_id: str
    content_id: str
    crf: int  # 0 marks the reference itself
    path: str

    def __post_init__(self):
        if self.crf != 0 and self.crf not in CRF_LEVELS:
            raise ManifestError(
                f"crf {self.crf} outside the closed set {CRF_LEVELS} (0 = reference)"
            )


@dataclass
class DatasetManifest:
    scenes: List[SceneEntry]
    assets: List[AssetEntry] = field(default_factory=list)
    labels: Dict[str, float] = field(default_factory=dict)
    encoder_version: str = ""

    def __post_init__(self):
        self.validate()

    def validate(self):
        ids = [s.content_id for s in self.scenes]
        if len(set(ids)) != len(ids):
            raise ManifestError("duplicate content_id in scenes")
        known = set(ids)
        seen_assets: Set[str] = set()
        seen_pairs: Set[Tuple[str, int]] = set()
        for a in self.assets:
            if a.asset_id in seen_assets:
                raise ManifestError(f"duplicate asset_id {a.asset_id!r}")
            seen_assets.add(a.asset_id)
            if (a.content_id, a.crf) in seen_pairs:
                raise ManifestError(
                    f"duplicate (content_id, crf) pair ({a.content_id!r}, {a.crf})"
                )
            seen_pairs.add((a.content_id, a.crf))
            if a.content_id not in known:
                raise ManifestError(
                    f"asset {a.asset_id!r} references unknown scene {a.content_id!r}"
                )
        for asset_id, score in self.labels.items():
            if asset_id not in seen_assets:
                raise ManifestError(f"label for unknown asset {asset_id!r}")
            if not 0.0 <= score <= 100.0:
                raise ManifestError(f"label {score} outside [0, 100]")

    def scene(self, content_id: str) -> SceneEntry:
        for s in self.scenes:
            if s.content_id == content_id:
                return s
        raise KeyError(content_id)

    def asset(self, asset_id: str) -> AssetEntry:
        for a in self.assets:
            if a.asset_id == asset_id:
                return a
        raise KeyError(asset_id)

    def distorted_assets(self) -> List[AssetEntry]:
        return [a for a in self.assets if a.crf != 0]

    def reference_asset(self, content_id: str) -> Optional[AssetEntry]:
        for a in self.assets:
            if a.content_id == content_id and a.crf == 0:
                return a
        return None


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from exc
    if doc.get("schema_version") != MANIFEST_SCHEMA_VERSION:
        raise ManifestError(
            f"unsupported manifest schema {doc.get('schema_version')!r}"
        )
    scenes = [SceneEntry(**s) for s in doc.get("scenes", [])]
    assets = [AssetEntry(**a) for a in doc.get("assets", [])]
    return DatasetManifest(
        scenes=scenes,
        assets=assets,
        labels={k: float(v) for k, v in doc.get("labels", {}).items()},
        encoder_version=doc.get("encoder_version", ""),
    )


def save_manifest(manifest: DatasetManifest, path) -> None:
    doc = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "encoder_version": manifest.encoder_version,
        "scenes": [
            {k: v for k, v in vars(s).items() if v is not None}
            for s in manifest.scenes
        ],
        "assets": [vars(a) for a in manifest.assets],
        "labels": manifest.labels,
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def curation_warnings(manifest: DatasetManifest) -> List[str]:
    """Checks on declared scene metadata: resolution >= 1920x1200, >= 10 Hz,
    ~8 s duration. Advisory only; absent metadata is not flagged."""
    warnings = []
    for s in manifest.scenes:
        if s.width is not None and s.height is not None:
            if s.width < 1920 or s.height < 1200:
                warnings.append(
                    f"{s.content_id}: resolution {s.width}x{s.height} below 1920x1200"
                )
        if s.fps is not None and s.fps < 10:
            warnings.append(f"{s.content_id}: frame rate {s.fps} below 10 Hz")
        if abs(s.duration_s - 8.0) > 0.5:
            warnings.append(f"{s.content_id}: duration {s.duration_s}s departs from 8s")
    return warnings


def probe_encoder_version(template: str) -> str:
    exe = shlex.split(template)[0]
    try:
        out = subprocess.run(
            [exe, "-version"], capture_output=True, text=True, timeout=20
        )
        first = (out.stdout or out.stderr).splitlines()
        return first[0].strip() if first else "unknown"
    except (OSError, subprocess.TimeoutExpired):
        return "unknown"


def encode_variants(
    scene: SceneEntry,
    crf_list: Sequence[int],
    encoder_command_template: str,
    output_dir,
) -> List[AssetEntry]:
    """Run the external encoder once per CRF and register the outputs."""
    for placeholder in ("{input}", "{output}", "{crf}"):
        if placeholder not in encoder_command_template:
            raise EncoderError(
                f"encoder template is missing the {placeholder} placeholder"
            )
    if not crf_list:
        return []
    ref = Path(scene.reference_path)
    if not ref.exists():
        raise EncoderError(f"reference file {ref} does not exist")
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    out: List[AssetEntry] = []
    for crf in crf_list:
        if crf not in CRF_LEVELS:
            raise ManifestError(f"crf {crf} outside the closed set {CRF_LEVELS}")
        target = output_dir / f"{scene.content_id}_crf{crf}{ref.suffix or '.mp4'}"
        cmd = encoder_command_template.format(
            input=str(ref), output=str(target), crf=crf
        )
        proc = subprocess.run(shlex.split(cmd), capture_output=True, text=True)
        if proc.returncode != 0:
            raise EncoderError(
                f"encoder exited with {proc.returncode} for {scene.content_id} "
                f"crf {crf}: {proc.stderr.strip()[-500:]}"
            )
        if not target.exists():
            raise EncoderError(f"encoder produced no output file {target}")
        out.append(
            AssetEntry(
                asset_id=f"{scene.content_id}_crf{crf}",
                content_id=scene.content_id,
                crf=crf,
                path=str(target),
            )
        )
    return out


@dataclass(frozen=True)
class SplitResult:
    train: frozenset
    val: frozenset

    def __post_init__(self):
        if self.train & self.val:
            raise ValueError("train and validation scenes overlap")

    def to_dict(self) -> dict:
        return {"train": sorted(self.train), "val": sorted(self.val)}


def split_by_scene(
    manifest: DatasetManifest, train_fraction: float, seed: int
) -> SplitResult:
    """Stratified scene-disjoint split.

    Per category the training count is ceil(n * fraction), capped at n - 1 so
    every category contributes validation scenes. At fraction 0.8 this
    reproduces 15/3, 8/2, 9/2 for category sizes 18/10/11.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(
            f"train fraction must lie in (0, 1), got {train_fraction} "
            "(validation must be nonempty)"
        )
    by_cat: Dict[str, List[str]] = {}
    for s in manifest.scenes:
        by_cat.setdefault(s.category, []).append(s.content_id)
    for cat, ids in sorted(by_cat.items()):
        if len(ids) < 2:
            raise ValueError(f"category {cat!r} has {len(ids)} scene(s); need >= 2")
    rng = random.Random(seed)
    train: Set[str] = set()
    val: Set[str] = set()
    for cat in sorted(by_cat):
        ids = sorted(by_cat[cat])
        rng.shuffle(ids)
        n = len(ids)
        n_train = min(math.ceil(n * train_fraction - 1e-9), n - 1)
        train.update(ids[:n_train])
        val.update(ids[n_train:])
    return SplitResult(train=frozenset(train), val=frozenset(val))


def assets_for(manifest: DatasetManifest, content_ids) -> List[AssetEntry]:
    wanted = set(content_ids)
    return [a for a in manifest.distorted_assets() if a.content_id in wanted]


def make_scene_folds(manifest: DatasetManifest, k: int, seed: int) -> List[List[str]]:
    """Partition scenes into k folds and return the distorted asset ids per
    fold. Scene-disjoint by construction."""
    ids = sorted(s.content_id for s in manifest.scenes)
    if k < 2 or k > len(ids):
        raise ValueError(f"need 2 <= k <= {len(ids)} folds, got {k}")
    rng = random.Random(seed)
    rng.shuffle(ids)
    folds_scenes: List[List[str]] = [[] for _ in range(k)]
    for i, cid in enumerate(ids):
        folds_scenes[i % k].append(cid)
    return [[a.asset_id for a in assets_for(manifest, f)] for f in folds_scenes]


@dataclass(frozen=True)
class LabelRow:
    asset_id: str
    label: MosLabel
    flagged: bool
    reason: str = ""


def join_labels(
    manifest: DatasetManifest,
    records: Sequence[RatingRecord],
    dimensions: Sequence[str] = LABEL_DIMENSIONS,
    min_raters: int = DEFAULT_MIN_RATERS,
    dmos: bool = False,
) -> List[LabelRow]:
    """One labeled row per distorted asset.

    The default label is the normalized MOS of the distorted clip over the
    pooled dimensions. With dmos=True the label becomes
    100 - 25 * (mos_raw(reference) - mos_raw(distorted)), clipped to [0, 100];
    this needs crf-0 reference ratings in the export and flags assets whose
    scene has none. Assets below min_raters are flagged, never silently kept.
    """
    if not records:
        raise ValueError("empty rating export")
    known = {a.asset_id for a in manifest.assets}
    by_asset: Dict[str, List[RatingRecord]] = {}
    for r in records:
        if r.asset_id not in known:
            raise ManifestError(f"rating references unknown asset {r.asset_id!r}")
        by_asset.setdefault(r.asset_id, []).append(r)

    ref_mos: Dict[str, MosLabel] = {}
    if dmos:
        for a in manifest.assets:
            if a.crf == 0 and a.asset_id in by_asset:
                ref_mos[a.content_id] = aggregate_mos(by_asset[a.asset_id], dimensions)

    rows: List[LabelRow] = []
    for asset in manifest.distorted_assets():
        recs = by_asset.get(asset.asset_id)
        if not recs:
            continue
        label = aggregate_mos(recs, dimensions)
        flagged = False
        reason = ""
        if label.n_raters < min_raters:
            flagged = True
            reason = f"only {label.n_raters} raters (need {min_raters})"
        if dmos:
            ref = ref_mos.get(asset.content_id)
            if ref is None:
                flagged = True
                reason = reason or "dmos mode: no rated reference for scene"
            else:
                value = 100.0 - 25.0 * (ref.mos_raw - label.mos_raw)
                value = min(max(value, 0.0), 100.0)
                label = MosLabel(
                    asset_id=label.asset_id,
                    mos_raw=value / 25.0 + 1.0,
                    mos_vmaf=value,
                    n_raters=label.n_raters,
                    std=label.std,
                    ci95_half_width=label.ci95_half_width,
                )
        rows.append(LabelRow(asset.asset_id, label, flagged, reason))
    rows.sort(key=lambda r: r.asset_id)
    return rows
