"""Study backend: participant gating, vision screening, constrained scenario
assignment, single-use playback tokens and append-only rating persistence.

The server state machine is authoritative; phases only move forward:
created -> screened -> rating(i) -> reflecting(i) -> ... -> done.
"""

import hashlib
import json
import random
import secrets
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from ..dataset import CRF_LEVELS, DatasetManifest
from ..stats.mos import DIMENSIONS, RatingRecord

SCENARIOS_PER_SESSION = 10
LANDOLT_DIRECTIONS = (
    "up", "up_right", "right", "down_right", "down", "down_left", "left", "up_left",
)

DEFAULT_QUESTIONNAIRE = {
    "detail_loss": ["fine_detail", "distance_judgement", "size_judgement"],
    "drivability": ["obstacle_detection", "path_estimation", "driving_support"],
    "situational_awareness": ["scene_completeness", "participant_prediction", "decision_confidence"],
    "reflection": ["information_loss", "safety_relevance", "assessment_revision"],
}

DEFAULT_ISHIHARA_PLATES = [
    {"plate_id": "p1", "image": "plates/p1.svg", "answer": "12", "options": ["12", "17", "21", "none"]},
    {"plate_id": "p2", "image": "plates/p2.svg", "answer": "8", "options": ["3", "8", "6", "none"]},
    {"plate_id": "p3", "image": "plates/p3.svg", "answer": "29", "options": ["29", "70", "26", "none"]},
    {"plate_id": "p4", "image": "plates/p4.svg", "answer": "5", "options": ["5", "2", "8", "none"]},
    {"plate_id": "p5", "image": "plates/p5.svg", "answer": "74", "options": ["74", "21", "71", "none"]},
]

REQUIRED_DEMOGRAPHICS = ("age", "gender", "license", "years_driving", "teleop_experience")

INITIAL_DIMENSIONS = ("detail_loss", "drivability", "situational_awareness")
REFLECTION_DIMENSIONS = ("reflection",)


class StudyError(Exception):
    """Base class; http layer maps subclasses to status codes."""


class ValidationFailure(StudyError):
    pass


class PhaseError(StudyError):
    pass


class TokenError(StudyError):
    pass


class UnknownSession(StudyError):
    pass


@dataclass
class StudyConfig:
    manifest: DatasetManifest
    media_root: str = "."
    server_secret: str = "change-me"
    operator_token: str = "change-me-too"
    min_screen_diagonal_in: float = 25.0
    landolt_pass_fraction: float = 0.75
    ishihara_pass_fraction: float = 0.8
    landolt_sizes_mm: Tuple[float, ...] = (12.0, 9.0, 7.0, 5.5, 4.5, 3.5, 3.0, 2.5)
    landolt_contrasts: Tuple[float, ...] = (1.0, 1.0, 1.0, 1.0, 0.8, 0.8, 0.6, 0.4)
    ishihara_plates: List[dict] = field(default_factory=lambda: [dict(p) for p in DEFAULT_ISHIHARA_PLATES])
    questionnaire: Dict[str, List[str]] = field(
        default_factory=lambda: {k: list(v) for k, v in DEFAULT_QUESTIONNAIRE.items()}
    )
    video_target_width_mm: float = 520.0
    ppmm_bounds: Tuple[float, float] = (1.0, 20.0)


@dataclass
class ScenarioAssignment:
    index: int
    content_id: str
    asset_id: str
    crf: int
    compressed_token: Optional[str] = None  # None until issued
    original_token: Optional[str] = None
    compressed_consumed: bool = False
    original_consumed: bool = False


@dataclass
class Session:
    session_id: str
    demographics: dict
    screen_diagonal: float
    phase: str  # created | screened | rating | reflecting | done | rejected
    seed: int
    reason: str = ""
    ppmm: Optional[float] = None
    landolt_spec: List[dict] = field(default_factory=list)
    vision: dict = field(default_factory=dict)
    index: int = 0
    assignments: List[ScenarioAssignment] = field(default_factory=list)


class RecordLog:
    """Append-only JSONL event log; one JSON document per line."""

    def __init__(self, path: Optional[str] = None):
        self.path = Path(path) if path else None
        self._memory: List[dict] = []
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            with open(self.path) as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        self._memory.append(json.loads(line))

    def append(self, event: dict) -> None:
        with self._lock:
            self._memory.append(event)
            if self.path is not None:
                with open(self.path, "a") as fh:
                    fh.write(json.dumps(event, sort_keys=True) + "\n")

    def events(self) -> List[dict]:
        with self._lock:
            return list(self._memory)


def _session_seed(session_id: str, secret: str) -> int:
    digest = hashlib.sha256(f"{session_id}:{secret}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def draw_assignments(
    manifest: DatasetManifest, rng: random.Random
) -> List[Tuple[str, str, int]]:
    """10 distinct scenes; every CRF level appears at least once.

    Each of the four levels lands on a random distinct position, the
    remaining six positions draw uniformly from the CRF set.
    """
    complete_scenes = []
    by_scene: Dict[str, Dict[int, str]] = {}
    for a in manifest.distorted_assets():
        by_scene.setdefault(a.content_id, {})[a.crf] = a.asset_id
    for cid in sorted(by_scene):
        if all(c in by_scene[cid] for c in CRF_LEVELS):
            complete_scenes.append(cid)
    if len(complete_scenes) < SCENARIOS_PER_SESSION:
        raise ValidationFailure(
            f"manifest has only {len(complete_scenes)} scenes with all CRF "
            f"variants; need {SCENARIOS_PER_SESSION}"
        )
    scenes = rng.sample(complete_scenes, SCENARIOS_PER_SESSION)
    crfs: List[Optional[int]] = [None] * SCENARIOS_PER_SESSION
    for level, pos in zip(CRF_LEVELS, rng.sample(range(SCENARIOS_PER_SESSION), len(CRF_LEVELS))):
        crfs[pos] = level
    for i in range(SCENARIOS_PER_SESSION):
        if crfs[i] is None:
            crfs[i] = rng.choice(CRF_LEVELS)
    return [
        (cid, by_scene[cid][crf], crf) for cid, crf in zip(scenes, crfs)
    ]


class StudyService:
    """All study operations behind a single lock; the HTTP layer is a thin
    wrapper around these methods."""

    def __init__(self, config: StudyConfig, log: Optional[RecordLog] = None):
        self.config = config
        self.log = log or RecordLog(None)
        self.sessions: Dict[str, Session] = {}
        self._tokens: Dict[str, Tuple[str, int, str]] = {}  # token -> (sid, index, which)
        self._lock = threading.RLock()
        self._replay()

    # -- persistence ---------------------------------------------------

    def _replay(self) -> None:
        for event in self.log.events():
            kind = event["event"]
            if kind == "session":
                s = Session(
                    session_id=event["session_id"],
                    demographics=event["demographics"],
                    screen_diagonal=event["screen_diagonal"],
                    phase=event["phase"],
                    seed=event["seed"],
                    reason=event.get("reason", ""),
                    landolt_spec=event.get("landolt_spec", []),
                )
                self.sessions[s.session_id] = s
            elif kind == "screening":
                s = self.sessions[event["session_id"]]
                s.phase = event["phase"]
                s.reason = event.get("reason", "")
                s.ppmm = event.get("ppmm")
                s.vision = event.get("vision", {})
                s.assignments = [
                    ScenarioAssignment(
                        index=i, content_id=a[0], asset_id=a[1], crf=a[2]
                    )
                    for i, a in enumerate(event.get("assignments", []))
                ]
            elif kind == "playback_issued":
                s = self.sessions[event["session_id"]]
                a = s.assignments[event["index"]]
                if event["which"] == "compressed":
                    a.compressed_token = event["token"]
                else:
                    a.original_token = event["token"]
                self._tokens[event["token"]] = (
                    event["session_id"], event["index"], event["which"]
                )
            elif kind == "playback_consumed":
                sid, index, which = self._tokens[event["token"]]
                a = self.sessions[sid].assignments[index]
                if which == "compressed":
                    a.compressed_consumed = True
                else:
                    a.original_consumed = True
            elif kind == "submission":
                s = self.sessions[event["session_id"]]
                s.phase = event["next_phase"]
                s.index = event["next_index"]

    # -- session lifecycle ---------------------------------------------

    def create_session(self, demographics: dict, screen_diagonal: float) -> Session:
        missing = [k for k in REQUIRED_DEMOGRAPHICS if demographics.get(k) is None]
        if missing:
            raise ValidationFailure(f"incomplete demographics: missing {missing}")
        with self._lock:
            session_id = secrets.token_urlsafe(24)
            seed = _session_seed(session_id, self.config.server_secret)
            if screen_diagonal < self.config.min_screen_diagonal_in:
                phase, reason = "rejected", (
                    f"screen diagonal {screen_diagonal}\" below the "
                    f"{self.config.min_screen_diagonal_in}\" minimum"
                )
                landolt_spec = []
            else:
                phase, reason = "created", ""
                rng = random.Random(seed)
                landolt_spec = [
                    {
                        "index": i,
                        "orientation": rng.choice(LANDOLT_DIRECTIONS),
                        "diameter_mm": self.config.landolt_sizes_mm[i],
                        "contrast": self.config.landolt_contrasts[i],
                    }
                    for i in range(len(self.config.landolt_sizes_mm))
                ]
            s = Session(
                session_id=session_id,
                demographics=dict(demographics),
                screen_diagonal=float(screen_diagonal),
                phase=phase,
                seed=seed,
                reason=reason,
                landolt_spec=landolt_spec,
            )
            self.sessions[session_id] = s
            self.log.append(
                {
                    "event": "session",
                    "session_id": session_id,
                    "demographics": s.demographics,
                    "screen_diagonal": s.screen_diagonal,
                    "phase": phase,
                    "reason": reason,
                    "seed": seed,
                    "landolt_spec": landolt_spec,
                }
            )
            return s

    def _get(self, session_id: str) -> Session:
        s = self.sessions.get(session_id)
        if s is None:
            raise UnknownSession(f"unknown session {session_id!r}")
        return s

    def submit_screening(
        self,
        session_id: str,
        ppmm: float,
        landolt_answers: Sequence[str],
        ishihara_answers: Sequence[str],
    ) -> Session:
        with self._lock:
            s = self._get(session_id)
            if s.phase != "created":
                raise PhaseError(f"screening not allowed in phase {s.phase!r}")
            lo, hi = self.config.ppmm_bounds
            if not lo <= ppmm <= hi:
                raise ValidationFailure(
                    f"implausible calibration {ppmm} px/mm (allowed {lo}..{hi})"
                )
            if len(landolt_answers) != len(s.landolt_spec):
                raise ValidationFailure(
                    f"expected {len(s.landolt_spec)} Landolt answers, "
                    f"got {len(landolt_answers)}"
                )
            plates = self.config.ishihara_plates
            if len(ishihara_answers) != len(plates):
                raise ValidationFailure(
                    f"expected {len(plates)} Ishihara answers, got {len(ishihara_answers)}"
                )
            landolt_correct = sum(
                ans == spec["orientation"]
                for ans, spec in zip(landolt_answers, s.landolt_spec)
            )
            ishihara_correct = sum(
                ans == plate["answer"] for ans, plate in zip(ishihara_answers, plates)
            )
            landolt_frac = landolt_correct / len(s.landolt_spec)
            ishihara_frac = ishihara_correct / len(plates)
            vision = {
                "landolt_fraction": landolt_frac,
                "landolt_pass": landolt_frac >= self.config.landolt_pass_fraction,
                "ishihara_fraction": ishihara_frac,
                "ishihara_pass": ishihara_frac >= self.config.ishihara_pass_fraction,
            }
            if vision["landolt_pass"] and vision["ishihara_pass"]:
                rng = random.Random(s.seed + 1)
                drawn = draw_assignments(self.config.manifest, rng)
                s.assignments = [
                    ScenarioAssignment(index=i, content_id=c, asset_id=a, crf=crf)
                    for i, (c, a, crf) in enumerate(drawn)
                ]
                s.phase = "rating"
                s.index = 0
                s.reason = ""
            else:
                drawn = []
                s.phase = "rejected"
                s.reason = "vision"
            s.ppmm = float(ppmm)
            s.vision = vision
            self.log.append(
                {
                    "event": "screening",
                    "session_id": session_id,
                    "ppmm": s.ppmm,
                    "vision": vision,
                    "phase": s.phase,
                    "reason": s.reason,
                    "assignments": drawn,
                }
            )
            return s

    # -- playback ------------------------------------------------------

    def issue_playback(self, session_id: str, index: int, which: str) -> str:
        if which not in ("compressed", "original"):
            raise ValidationFailure(f"unknown stream kind {which!r}")
        with self._lock:
            s = self._get(session_id)
            if s.phase not in ("rating", "reflecting"):
                raise PhaseError(f"no playback in phase {s.phase!r}")
            if index != s.index:
                raise PhaseError(
                    f"out of order: session is at scenario {s.index}, requested {index}"
                )
            expected_phase = "rating" if which == "compressed" else "reflecting"
            if s.phase != expected_phase:
                raise PhaseError(
                    f"{which} playback requires phase {expected_phase!r}, "
                    f"session is {s.phase!r}"
                )
            a = s.assignments[index]
            already = a.compressed_token if which == "compressed" else a.original_token
            if already is not None:
                raise TokenError(f"{which} playback for scenario {index} already issued")
            token = secrets.token_urlsafe(18)
            if which == "compressed":
                a.compressed_token = token
            else:
                a.original_token = token
            self._tokens[token] = (session_id, index, which)
            self.log.append(
                {
                    "event": "playback_issued",
                    "session_id": session_id,
                    "index": index,
                    "which": which,
                    "token": token,
                }
            )
            return token

    def consume_token(self, token: str) -> str:
        """Mark the token used and return the media path to serve."""
        with self._lock:
            entry = self._tokens.get(token)
            if entry is None:
                raise TokenError("unknown playback token")
            sid, index, which = entry
            s = self._get(sid)
            a = s.assignments[index]
            consumed = a.compressed_consumed if which == "compressed" else a.original_consumed
            if consumed:
                raise TokenError("playback token already used")
            if which == "compressed":
                a.compressed_consumed = True
                asset = self.config.manifest.asset(a.asset_id)
                path = asset.path
            else:
                a.original_consumed = True
                path = self.config.manifest.scene(a.content_id).reference_path
            self.log.append({"event": "playback_consumed", "token": token})
            return path

    # -- submissions ----------------------------------------------------

    def _required_items(self, dimensions: Sequence[str]) -> List[Tuple[str, str]]:
        return [
            (dim, item)
            for dim in dimensions
            for item in self.config.questionnaire[dim]
        ]

    def record_submission(
        self,
        session_id: str,
        index: int,
        phase: str,
        answers: Sequence[dict],
        object_check: Optional[Sequence[str]] = None,
    ) -> Session:
        if phase not in ("initial", "reflection"):
            raise ValidationFailure(f"unknown submission phase {phase!r}")
        with self._lock:
            s = self._get(session_id)
            expected = "rating" if phase == "initial" else "reflecting"
            if s.phase != expected or index != s.index:
                raise PhaseError(
                    f"{phase} submission for scenario {index} not allowed: session "
                    f"is at {s.phase}({s.index}) (duplicate or out of order)"
                )
            a = s.assignments[index]
            if phase == "initial" and not a.compressed_consumed:
                raise PhaseError("compressed playback must be consumed before rating")
            if phase == "reflection" and not a.original_consumed:
                raise PhaseError("original playback must be consumed before reflection")
            dims = INITIAL_DIMENSIONS if phase == "initial" else REFLECTION_DIMENSIONS
            required = self._required_items(dims)
            provided = {}
            for ans in answers:
                key = (ans.get("dimension"), ans.get("item_id"))
                value = ans.get("value")
                if key not in required:
                    raise ValidationFailure(f"unexpected item {key}")
                if key in provided:
                    raise ValidationFailure(f"duplicate item {key}")
                if not isinstance(value, int) or not 1 <= value <= 5:
                    raise ValidationFailure(f"value for {key} must be 1..5, got {value!r}")
                provided[key] = value
            missing = [k for k in required if k not in provided]
            if missing:
                raise ValidationFailure(f"missing items: {missing}")

            check_graded = False
            check_passed = True
            selected: List[str] = []
            if phase == "reflection":
                if object_check is None or not isinstance(object_check, (list, tuple)):
                    raise ValidationFailure("reflection requires the object_check selection")
                selected = [str(x) for x in object_check]
                scene = self.config.manifest.scene(a.content_id)
                if scene.objects:
                    check_graded = True
                    check_passed = set(selected) == set(scene.objects.get("present", []))
            elif object_check is not None:
                raise ValidationFailure("object_check only belongs to the reflection phase")

            if phase == "initial":
                next_phase, next_index = "reflecting", index
            elif index + 1 < len(s.assignments):
                next_phase, next_index = "rating", index + 1
            else:
                next_phase, next_index = "done", index
            s.phase = next_phase
            s.index = next_index
            self.log.append(
                {
                    "event": "submission",
                    "session_id": session_id,
                    "index": index,
                    "phase": phase,
                    "asset_id": a.asset_id,
                    "answers": [
                        {"dimension": d, "item_id": i, "value": provided[(d, i)]}
                        for d, i in required
                    ],
                    "object_check": selected,
                    "object_check_graded": check_graded,
                    "object_check_passed": check_passed,
                    "next_phase": next_phase,
                    "next_index": next_index,
                }
            )
            return s

    # -- exports ---------------------------------------------------------

    def export_ratings(self, completed_only: bool = True) -> List[RatingRecord]:
        with self._lock:
            done = {
                sid for sid, s in self.sessions.items()
                if s.phase == "done" or not completed_only
            }
            rows: List[RatingRecord] = []
            for event in self.log.events():
                if event.get("event") != "submission":
                    continue
                sid = event["session_id"]
                if sid not in done:
                    continue
                for ans in event["answers"]:
                    rows.append(
                        RatingRecord(
                            participant_id=sid,
                            asset_id=event["asset_id"],
                            dimension=ans["dimension"],
                            item_id=ans["item_id"],
                            value=ans["value"],
                        )
                    )
            rows.sort(
                key=lambda r: (r.asset_id, r.participant_id, r.dimension, r.item_id)
            )
            return rows

    def export_object_checks(self, completed_only: bool = True) -> List[Tuple[str, str, bool]]:
        """(participant_id, asset_id, passed) for graded reflection checks."""
        with self._lock:
            done = {
                sid for sid, s in self.sessions.items()
                if s.phase == "done" or not completed_only
            }
            rows = [
                (e["session_id"], e["asset_id"], bool(e["object_check_passed"]))
                for e in self.log.events()
                if e.get("event") == "submission"
                and e["phase"] == "reflection"
                and e.get("object_check_graded")
                and e["session_id"] in done
            ]
            rows.sort()
            return rows

    # -- views -------------------------------------------------------------

    def session_view(self, session_id: str) -> dict:
        with self._lock:
            s = self._get(session_id)
            return {
                "session_id": s.session_id,
                "phase": s.phase,
                "index": s.index,
                "reason": s.reason,
                "n_scenarios": len(s.assignments),
                "assignments": [
                    {
                        "index": a.index,
                        "content_id": a.content_id,
                        "asset_id": a.asset_id,
                        "crf": a.crf,
                        "compressed_issued": a.compressed_token is not None,
                        "compressed_consumed": a.compressed_consumed,
                        "original_issued": a.original_token is not None,
                        "original_consumed": a.original_consumed,
                    }
                    for a in s.assignments
                ],
                "questionnaire": self.config.questionnaire,
                "object_check_options": self._object_options(s),
                "video_target_width_mm": self.config.video_target_width_mm,
            }

    def _object_options(self, s: Session) -> Optional[List[str]]:
        if s.phase not in ("rating", "reflecting"):
            return None
        scene = self.config.manifest.scene(s.assignments[s.index].content_id)
        if scene.objects:
            return list(scene.objects.get("options", []))
        return ["vehicle", "pedestrian", "cyclist", "traffic_sign", "animal"]

    def screening_view(self, session_id: str) -> dict:
        with self._lock:
            s = self._get(session_id)
            return {
                "landolt": [dict(r) for r in s.landolt_spec],
                "ishihara": [
                    {"plate_id": p["plate_id"], "image": p["image"], "options": p["options"]}
                    for p in self.config.ishihara_plates
                ],
                "directions": list(LANDOLT_DIRECTIONS),
            }
