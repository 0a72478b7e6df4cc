"""Raw Likert ratings to MOS labels on the 0-100 fusion scale."""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Set, Tuple

import numpy as np

DIMENSIONS = ("detail_loss", "drivability", "situational_awareness", "reflection")
# dimension 4 (reflection, collected after the reference video) is reported
# separately and excluded from training labels by default
LABEL_DIMENSIONS = ("detail_loss", "drivability", "situational_awareness")

RATING_CSV_COLUMNS = ("asset_id", "participant_id", "dimension", "item", "value")


@dataclass(frozen=True)
class RatingRecord:
    participant_id: str
    asset_id: str
    dimension: str
    item_id: str
    value: int

    def __post_init__(self):
        if self.dimension not in DIMENSIONS:
            raise ValueError(f"unknown dimension {self.dimension!r}")
        if self.value not in (1, 2, 3, 4, 5):
            raise ValueError(f"Likert value must be 1..5, got {self.value}")


@dataclass(frozen=True)
class MosLabel:
    asset_id: str
    mos_raw: float
    mos_vmaf: float
    n_raters: int
    std: float
    ci95_half_width: float

    def __post_init__(self):
        if self.n_raters < 1:
            raise ValueError("n_raters must be >= 1")
        expected = (self.mos_raw - 1.0) * 25.0
        if abs(self.mos_vmaf - expected) > 1e-9:
            raise ValueError("mos_vmaf must equal (mos_raw - 1) * 25")


def likert_to_vmaf(mean_rating: float) -> float:
    """Map the 1..5 Likert scale linearly onto 0..100."""
    return (mean_rating - 1.0) * 25.0


def aggregate_mos(
    records: Sequence[RatingRecord],
    dimensions: Sequence[str] = LABEL_DIMENSIONS,
) -> MosLabel:
    """MOS for one asset: mean over items of the pooled dimensions per
    participant, then mean over participants."""
    if not records:
        raise ValueError("no rating records")
    asset_ids = {r.asset_id for r in records}
    if len(asset_ids) != 1:
        raise ValueError(f"records span several assets: {sorted(asset_ids)}")
    pooled = [r for r in records if r.dimension in dimensions]
    for dim in dimensions:
        if not any(r.dimension == dim for r in pooled):
            raise ValueError(f"no records for pooled dimension {dim!r}")
    by_participant: Dict[str, List[int]] = {}
    for r in pooled:
        by_participant.setdefault(r.participant_id, []).append(r.value)
    means = np.array([np.mean(v) for v in by_participant.values()])
    n = len(means)
    mos_raw = float(means.mean())
    std = float(means.std(ddof=1)) if n > 1 else 0.0
    return MosLabel(
        asset_id=next(iter(asset_ids)),
        mos_raw=mos_raw,
        mos_vmaf=likert_to_vmaf(mos_raw),
        n_raters=n,
        std=std,
        ci95_half_width=1.96 * std / np.sqrt(n) if n > 1 else 0.0,
    )


def aggregate_all(
    records: Sequence[RatingRecord],
    dimensions: Sequence[str] = LABEL_DIMENSIONS,
) -> Dict[str, MosLabel]:
    by_asset: Dict[str, List[RatingRecord]] = {}
    for r in records:
        by_asset.setdefault(r.asset_id, []).append(r)
    return {a: aggregate_mos(rs, dimensions) for a, rs in sorted(by_asset.items())}


def screen_participants(
    records: Sequence[RatingRecord],
    object_checks: Iterable[Tuple[str, str, bool]],
    fail_threshold: float = 0.5,
) -> Tuple[List[RatingRecord], Set[str]]:
    """Drop participants who failed the object-identification check on more
    than `fail_threshold` of their scenarios.

    object_checks rows: (participant_id, asset_id, passed).
    """
    outcomes: Dict[str, List[bool]] = {}
    for participant_id, _asset_id, passed in object_checks:
        outcomes.setdefault(participant_id, []).append(bool(passed))
    excluded = {
        pid
        for pid, res in outcomes.items()
        if res.count(False) / len(res) > fail_threshold
    }
    kept = [r for r in records if r.participant_id not in excluded]
    return kept, excluded


def write_rating_csv(path, records: Sequence[RatingRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RATING_CSV_COLUMNS)
        for r in records:
            w.writerow([r.asset_id, r.participant_id, r.dimension, r.item_id, r.value])


def read_rating_csv(path) -> List[RatingRecord]:
    path = Path(path)
    out: List[RatingRecord] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != RATING_CSV_COLUMNS:
            raise ValueError(f"unexpected rating CSV header: {header}")
        for row in reader:
            asset_id, participant_id, dimension, item, value = row
            out.append(
                RatingRecord(
                    participant_id=participant_id,
                    asset_id=asset_id,
                    dimension=dimension,
                    item_id=item,
                    value=int(value),
                )
            )
    return out
